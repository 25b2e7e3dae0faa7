"""Operator-facing gateway: HTTP API plus the command-line harness."""
