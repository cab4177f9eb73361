import logging

from utils.logger import LOG_FORMAT, current_run, run_context, setup_logger


class TestRunContext:
    def test_records_carry_the_active_label(self, caplog):
        logger = setup_logger("tests.run_context")
        caplog.set_level(logging.INFO, logger="tests.run_context")
        logger.info("outside")
        with run_context("rgatv2 seed 3"):
            logger.info("inside")
        assert [r.run for r in caplog.records] == ["-", "rgatv2 seed 3"]

    def test_nested_labels_restore(self):
        assert current_run() == "-"
        with run_context("benchmark"):
            with run_context("gru_agg seed 0"):
                assert current_run() == "gru_agg seed 0"
            assert current_run() == "benchmark"
        assert current_run() == "-"

    def test_formatted_line_shows_the_label(self, caplog):
        logger = setup_logger("tests.run_format")
        caplog.set_level(logging.INFO, logger="tests.run_format")
        with run_context("train"):
            logger.info("epoch 1/35")
        line = logging.Formatter(LOG_FORMAT).format(caplog.records[-1])
        assert "[train] epoch 1/35" in line

    def test_handler_added_once(self):
        first = setup_logger("tests.run_once")
        again = setup_logger("tests.run_once")
        assert first is again and len(again.handlers) == 1 and len(again.filters) == 1
