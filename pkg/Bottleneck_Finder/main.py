#!/usr/bin/env python3
"""
Bottleneck Finder
Entry point for the command line application
"""

import sys

from app.cli import main

if __name__ == "__main__":
    sys.exit(main())
