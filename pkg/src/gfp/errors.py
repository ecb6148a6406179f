"""Exception hierarchy shared by the library and the CLI."""

from __future__ import annotations


class GFPError(Exception):
    """Base class for all library errors."""


class ParseError(GFPError):
    """A malformed record in an input file."""

    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where = f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


class EmptyGraphError(GFPError):
    """No edges survived ingestion."""


class CascadeCycleError(GFPError):
    """Parent links of a repost log form a cycle."""

    def __init__(self, tweet_id: int):
        self.tweet_id = tweet_id
        super().__init__(f"repost parent cycle through tweet {tweet_id}")


class FeasibilityError(GFPError):
    """A generator could not realise the requested degree sequences."""


class RankCouplingError(GFPError):
    """The requested rank correlation cannot be reached within tolerance."""
