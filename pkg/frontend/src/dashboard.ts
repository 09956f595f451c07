// Evaluation dashboard: one horizontal bar per candidate, values taken
// directly from the report's machine records. QA_JUDGE reports add a
// criterion filter; accuracy-style reports show one bar per candidate.

import type { ReportRecord } from "./types.js";
import { JUDGE_CRITERIA } from "./types.js";

export interface BarSpec {
  candidate: string;
  /** exact value from the machine record, untouched */
  value: number;
  label: string;
  /** 0..100 width used for the bar element */
  widthPct: number;
}

export function barsFromRecords(records: ReportRecord[], criterion?: string): BarSpec[] {
  const bars: BarSpec[] = [];
  for (const record of records) {
    if (record.kind === "QA_JUDGE") {
      const key = criterion ?? "accuracy";
      const value = record.metrics[key];
      if (typeof value !== "number") {
        continue;
      }
      bars.push({
        candidate: record.candidate,
        value,
        label: value.toFixed(2),
        widthPct: (value / 5) * 100,
      });
    } else {
      const value = record.metrics["accuracy"];
      if (typeof value !== "number") {
        continue;
      }
      bars.push({
        candidate: record.candidate,
        value,
        label: `${(value * 100).toFixed(1)}%`,
        widthPct: value * 100,
      });
    }
  }
  bars.sort((a, b) => b.value - a.value || a.candidate.localeCompare(b.candidate));
  return bars;
}

export function renderDashboard(
  root: HTMLElement,
  records: ReportRecord[] | null,
  criterion?: string,
): void {
  root.textContent = "";
  if (records === null || records.length === 0) {
    const empty = document.createElement("div");
    empty.className = "dashboard-empty";
    empty.textContent = "No report loaded.";
    root.appendChild(empty);
    return;
  }
  const kind = records[0]?.kind ?? "";
  const heading = document.createElement("h3");
  heading.textContent = `${kind} — run ${records[0]?.run_id ?? ""}`;
  root.appendChild(heading);

  if (kind === "QA_JUDGE") {
    const filter = document.createElement("select");
    filter.className = "criterion-filter";
    for (const name of JUDGE_CRITERIA) {
      const option = document.createElement("option");
      option.value = name;
      option.textContent = name;
      if (name === (criterion ?? "accuracy")) {
        option.selected = true;
      }
      filter.appendChild(option);
    }
    filter.addEventListener("change", () => {
      renderDashboard(root, records, filter.value);
    });
    root.appendChild(filter);
  }

  const chart = document.createElement("div");
  chart.className = "chart";
  for (const bar of barsFromRecords(records, criterion)) {
    const row = document.createElement("div");
    row.className = "chart-row";
    row.dataset.candidate = bar.candidate;
    row.dataset.value = String(bar.value);

    const name = document.createElement("span");
    name.className = "chart-label";
    name.textContent = bar.candidate;

    const track = document.createElement("div");
    track.className = "chart-track";
    const fill = document.createElement("div");
    fill.className = "chart-fill";
    fill.style.width = `${bar.widthPct}%`;
    track.appendChild(fill);

    const value = document.createElement("span");
    value.className = "chart-value";
    value.textContent = bar.label;

    row.appendChild(name);
    row.appendChild(track);
    row.appendChild(value);
    chart.appendChild(row);
  }
  root.appendChild(chart);
}
