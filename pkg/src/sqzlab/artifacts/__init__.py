"""Files sqzlab reads and writes: run configuration, strict CSV tables, run manifests."""

from sqzlab.artifacts.config_file import SqzlabConfig, load_config, parse_config, reference_config
from sqzlab.artifacts.manifest import MANIFEST_NAME, RunManifest, read_manifest, write_manifest
from sqzlab.artifacts.traces import (
    Table,
    read_spectrum_trace,
    read_table,
    read_transmission,
    write_json,
    write_spectrum_trace,
    write_table,
    write_transmission,
)

__all__ = [
    "MANIFEST_NAME",
    "RunManifest",
    "SqzlabConfig",
    "Table",
    "load_config",
    "parse_config",
    "read_manifest",
    "read_spectrum_trace",
    "read_table",
    "read_transmission",
    "reference_config",
    "write_json",
    "write_manifest",
    "write_spectrum_trace",
    "write_table",
    "write_transmission",
]
