"""Reading campaign output back and rendering it for people or spreadsheets."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

PAIR_COLUMNS = ("pair", "attempts", "successes", "triggers", "crashes", "rejects")


def load_report(output_dir) -> dict | None:
    path = Path(output_dir) / "report.json"
    if not path.is_file():
        return None
    return json.loads(path.read_text(encoding="utf-8"))


def _rejects(stats: dict) -> str:
    return ";".join(f"{k}:{v}" for k, v in sorted(stats.get("rejects", {}).items()))


def pairs_csv(report: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(PAIR_COLUMNS)
    for pair in sorted(report.get("pairs", {})):
        s = report["pairs"][pair]
        w.writerow([pair, s["attempts"], s["successes"], s["triggers"], s["crashes"], _rejects(s)])
    return buf.getvalue()


def table(report: dict) -> str:
    t = report["totals"]
    lines = [
        f"iterations {t['iterations']}  executed {t['executed']}  valid {t['valid_count']}"
        f"  validity_rate {t['validity_rate']:.3f}",
        "triggers " + (", ".join(f"{k}={v}" for k, v in t["triggers"].items()) or "none"),
        f"crash buckets {len(t['crashes'])}  flaky {len(t['flaky'])}",
        "",
    ]
    rows = [("pair", "attempts", "ok", "triggers", "crashes", "rejects")]
    for pair in sorted(report.get("pairs", {})):
        s = report["pairs"][pair]
        rows.append((pair, str(s["attempts"]), str(s["successes"]), str(s["triggers"]), str(s["crashes"]),
                     _rejects(s) or "-"))
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    for r in rows:
        lines.append("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
    for sig, entry in t["crashes"].items():
        lines.append(f"crash {sig}  x{entry['count']}  {entry['reproducer']}")
    return "\n".join(lines) + "\n"


def summary_line(report: dict) -> str:
    t = report["totals"]
    trig = " ".join(f"{k}={v}" for k, v in t["triggers"].items()) or "none"
    return (f"iterations={t['iterations']} valid={t['valid_count']} validity_rate={t['validity_rate']:.3f} "
            f"triggers[{trig}] crashes={len(t['crashes'])} flaky={len(t['flaky'])}")
