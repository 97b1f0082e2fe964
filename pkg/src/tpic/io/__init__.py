from .deck import DeckError, Diagnostics, parse_deck, render_deck
from .presets import PRESETS, preset_config, preset_deck
from .report import (BadMagicError, GridReport, ReportFormatError, TruncatedReportError,
                     VersionMismatchError, read_report, report_csv, write_report)
