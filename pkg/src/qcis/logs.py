import logging

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def create_logger(level=logging.INFO):
    log_handle = logging.getLogger('qcis')
    log_handle.propagate = False
    log_handle.setLevel(level)

    if not log_handle.handlers:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        log_handle.addHandler(handler)

    return log_handle
