from __future__ import annotations

import logging
from pathlib import Path

from superdist.cli.config import ExperimentConfig
from superdist.cli.constants import CURVE_CSV
from superdist.core.export import write_curve
from superdist.core.market import curve

logger = logging.getLogger(__name__)


def handle_analyze(config: ExperimentConfig) -> Path:
    """Write the saturation / price / expected revenue / effective price table."""
    rows = curve(config.N, config.scheme, config.schedule)
    path = write_curve(rows, config.out_dir / CURVE_CSV)
    logger.info("wrote %s rows to %s", len(rows), path)
    return path
