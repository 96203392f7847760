"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class AdvnerError(Exception):
    exit_code = 2

    def details(self):
        return {}


class DataError(AdvnerError):
    """Invalid input data (corpus, gazetteer, run series, report)."""


class CorpusFormatError(DataError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)

    def details(self):
        return {"line": self.line} if self.line is not None else {}


class TagSequenceError(CorpusFormatError):
    """Tag sequence violates IOB2."""


class AlignmentError(DataError):
    def __init__(self, message, sentence_id=None):
        self.sentence_id = sentence_id
        super().__init__(message)

    def details(self):
        return {"sentence_id": self.sentence_id}


class GazetteerError(DataError):
    pass


class StatsError(DataError):
    pass


class TransportError(AdvnerError):
    """Model endpoint unreachable or returned something unusable."""

    exit_code = 3


class ProtocolError(TransportError):
    """Endpoint answered, but the response does not fit the wire protocol."""
