// The step-by-step side panel: ordered kind badges, collapsible payloads for
// the verbose steps, and highlighted factor classifications on verdicts.

import type { Trace, TraceStep } from "./types.js";

const COLLAPSIBLE_KINDS = new Set(["PROMPT", "MODEL_OUTPUT"]);

function badgeClass(step: TraceStep): string {
  if (step.kind === "VERDICT" && step.payload.startsWith("ParseError")) {
    return "badge badge-error";
  }
  return `badge badge-${step.kind.toLowerCase()}`;
}

function verdictBody(payload: string): HTMLElement {
  const container = document.createElement("div");
  container.className = "verdict-body";
  try {
    const parsed = JSON.parse(payload) as {
      rows?: { model_name: string; channel: string; direction: string; factors: Record<string, string> }[];
    };
    if (!parsed.rows) {
      throw new Error("not a classification verdict");
    }
    for (const row of parsed.rows) {
      const rowEl = document.createElement("div");
      rowEl.className = "verdict-row";
      const title = document.createElement("strong");
      title.textContent = `${row.model_name} - ${row.channel}: ${row.direction}`;
      rowEl.appendChild(title);
      for (const [factor, cls] of Object.entries(row.factors)) {
        const chip = document.createElement("span");
        chip.className = `factor-chip factor-${cls}`;
        chip.textContent = `${factor}: ${cls}`;
        rowEl.appendChild(chip);
      }
      container.appendChild(rowEl);
    }
  } catch {
    const pre = document.createElement("pre");
    pre.textContent = payload;
    container.appendChild(pre);
  }
  return container;
}

export function renderTrace(root: HTMLElement, trace: Trace | null): void {
  root.textContent = "";
  if (trace === null) {
    const empty = document.createElement("div");
    empty.className = "trace-empty";
    empty.textContent = "No trace to show. It may have been deleted or never existed.";
    root.appendChild(empty);
    return;
  }
  const list = document.createElement("ol");
  list.className = "trace-steps";
  trace.steps.forEach((step, i) => {
    const item = document.createElement("li");
    item.className = "trace-step";
    item.dataset.kind = step.kind;
    item.dataset.index = String(i);

    const badge = document.createElement("span");
    badge.className = badgeClass(step);
    badge.textContent = step.kind;
    item.appendChild(badge);

    if (step.kind === "VERDICT" && !step.payload.startsWith("ParseError")) {
      item.appendChild(verdictBody(step.payload));
    } else if (COLLAPSIBLE_KINDS.has(step.kind)) {
      const details = document.createElement("details");
      const summary = document.createElement("summary");
      summary.textContent = `${step.payload.length} chars`;
      const pre = document.createElement("pre");
      pre.className = "step-payload";
      pre.textContent = step.payload;
      details.appendChild(summary);
      details.appendChild(pre);
      item.appendChild(details);
    } else {
      const span = document.createElement("span");
      span.className = "step-payload";
      span.textContent = step.payload;
      item.appendChild(span);
    }
    list.appendChild(item);
  });
  root.appendChild(list);
}
