"""Exception hierarchy shared by the toolkit.

``DataError`` covers anything caused by bad input files or arguments; the CLI
maps it to exit status 2. Everything else escaping a subcommand is treated as
an internal error.
"""


class DataError(ValueError):
    pass


class ManifestError(DataError):
    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}"
        super().__init__(f"{where}: {message}" if where else message)


class AlignmentError(DataError):
    pass


class LexiconError(DataError):
    pass


class OOVError(LexiconError):
    def __init__(self, word):
        self.word = word
        super().__init__(f"word not in lexicon: {word!r}")


class PauseSlotError(DataError):
    pass


class CalibrationError(DataError):
    pass


class CheckpointError(DataError):
    pass


class CorruptCheckpointError(CheckpointError):
    pass


class ConfigMismatchError(CheckpointError):
    pass


class MelFormatError(DataError):
    pass


class ConfigError(DataError):
    pass


class TrainingDivergedError(RuntimeError):
    def __init__(self, step, losses):
        self.step = step
        self.losses = losses
        super().__init__(f"non-finite loss at step {step}: {losses}")
