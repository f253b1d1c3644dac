"""Tests for Bottleneck Finder"""
