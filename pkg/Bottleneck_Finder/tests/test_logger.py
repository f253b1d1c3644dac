import logging

from app.logger import ListHandler, setup_logger


def test_handler_formats_entries():
    logger, handler = setup_logger("BottleneckFinder.test_entries", logging.DEBUG)
    logger.debug("first")
    logger.warning("second")
    assert len(handler.entries) == 2
    assert "WARNING" in handler.entries[1]
    assert "[BottleneckFinder.test_entries] second" in handler.entries[1]
    assert handler.level_counts() == {"DEBUG": 1, "WARNING": 1}


def test_setup_does_not_stack_handlers():
    logger, _ = setup_logger("BottleneckFinder.test_stack")
    logger, handler = setup_logger("BottleneckFinder.test_stack")
    assert [h for h in logger.handlers if isinstance(h, ListHandler)] == [handler]


def test_callbacks():
    logger, handler = setup_logger("BottleneckFinder.test_callbacks")
    seen = []
    handler.add_callback(lambda record: seen.append(record.levelname))
    handler.add_callback(lambda record: 1 / 0)
    logger.info("hello")
    logger.error("boom")
    assert seen == ["INFO", "ERROR"]
    assert len(handler.entries) == 2


def test_save_writes_run_header(tmp_path):
    logger, handler = setup_logger("BottleneckFinder.test_save")
    logger.warning("solution is dominated")
    logger.info("saved line")
    path = handler.save(tmp_path / "logs" / "run.log", app_version="1.2.3",
                        run_info={"Command": "morph solve", "Inputs": "four_component.json", "Exit status": 0})
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0].startswith("Bottleneck Finder Log - Saved:")
    assert lines[1:6] == [
        "Application Version: 1.2.3",
        "Command: morph solve",
        "Inputs: four_component.json",
        "Exit status: 0",
        "Warnings: 1, Errors: 0",
    ]
    assert lines[-1].endswith("saved line")


def test_save_without_run_info(tmp_path):
    _, handler = setup_logger("BottleneckFinder.test_save_bare")
    text = handler.save(tmp_path / "run.log").read_text(encoding="utf-8")
    assert "Application Version: unknown" in text
    assert "Warnings: 0, Errors: 0" in text
