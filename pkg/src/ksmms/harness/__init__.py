"""Property-suite harness: generators, suite runner, reports and CLI."""
