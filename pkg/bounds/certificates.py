import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from core.settings import section

logger = logging.getLogger(__name__)


@dataclass
class PropertyReport:
    property: str
    verdict: str
    max_gap: float
    slack: float
    witness: Optional[dict] = None
    details: dict = field(default_factory=dict)

    @property
    def passed(self):
        return self.verdict == "pass"

    def to_dict(self):
        return {
            "property": self.property,
            "verdict": self.verdict,
            "max_gap": self.max_gap,
            "slack": self.slack,
            "witness": self.witness,
            "details": self.details,
        }

    def row(self):
        return {"property": self.property, "verdict": self.verdict, "max_gap": self.max_gap, "slack": self.slack}


def default_slack(cfg, steps, constant=None):
    """slack_factor * tolerance + C / N, C from bounds.discretization_constant"""
    if constant is None:
        constant = float(section("bounds").get("discretization_constant", 5.0))
    factor = float(section("axioms").get("slack_factor", 10.0))
    slack = factor * cfg.tolerance + float(constant) / int(steps)
    logger.info("comparison slack %.6g (C=%.4g, N=%d)", slack, constant, steps)
    return slack


def comparison_certificate(field_low, field_high, slack, name="comparison"):
    """
    Certifies Y_low <= Y_high at every node up to the slack. Both fields must
    share one discretization; the witness is the node with the largest gap.
    """
    field_low.require_same_discretization(field_high)
    worst = (-np.inf, 0, 0, 0.0, 0.0)
    for i, (low, high) in enumerate(zip(field_low.y, field_high.y)):
        gaps = low - high
        j = int(np.argmax(gaps))
        if gaps[j] > worst[0]:
            worst = (float(gaps[j]), i, j, float(low[j]), float(high[j]))

    gap, level, node, low_value, high_value = worst
    verdict = "pass" if gap <= slack else "fail"
    witness = {
        "level": level,
        "node": node,
        "time": float(field_low.grid.nodes[level]),
        "state": field_low.states[level][node].tolist(),
        "low": low_value,
        "high": high_value,
    }
    report = PropertyReport(
        property=name,
        verdict=verdict,
        max_gap=gap,
        slack=float(slack),
        witness=witness if verdict != "pass" else None,
        details={
            "low": field_low.metadata.get("driver", field_low.metadata.get("method", "")),
            "high": field_high.metadata.get("driver", field_high.metadata.get("method", "")),
            "low_y0": field_low.y0,
            "high_y0": field_high.y0,
            "worst_node": witness,
        },
    )
    log = logger.info if report.passed else logger.warning
    log("%s certificate: %s (max gap %.3g, slack %.3g)", name, verdict, gap, slack)
    return report
