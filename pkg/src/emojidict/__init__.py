"""Emoji insertion for punctuation-free dictation text."""

__version__ = "0.1.0"
