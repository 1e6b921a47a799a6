"""Token-embedding exporter feeding the analysis toolkit's file formats."""

__version__ = "0.1.0"

from .exporter import ExportError, ExportManifest, export, validate_manifest
