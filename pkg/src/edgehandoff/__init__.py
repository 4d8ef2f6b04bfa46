"""Decentralized edge authentication and session-key migration for mobile IoT nodes."""

__version__ = "0.1.0"
