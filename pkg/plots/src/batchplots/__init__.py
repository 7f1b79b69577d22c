"""CSV-to-figure rendering for benchmark records."""

from .render import SchemaError, aggregate, load_records, render
