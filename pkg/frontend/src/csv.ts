// Client-side validation for the table attachment path. Only the documented
// CSV header shape is accepted; anything else is rejected before upload.

export const REQUIRED_HEADER_PREFIX = ["model name", "channel", "absolute change"];

export const EXPECTED_HEADER_HINT =
  "model name,channel,absolute change,<factor>,... (at least one factor column)";

export interface CsvCheck {
  ok: boolean;
  error?: string;
}

export function validateAttachmentCsv(text: string): CsvCheck {
  const lines = text.split(/\r?\n/).filter((line) => line.trim().length > 0);
  if (lines.length < 2) {
    return { ok: false, error: `attachment needs a header line and at least one value line; expected header: ${EXPECTED_HEADER_HINT}` };
  }
  const header = (lines[0] ?? "").split(",").map((cell) => cell.trim());
  const prefix = header.slice(0, REQUIRED_HEADER_PREFIX.length);
  const prefixOk =
    prefix.length === REQUIRED_HEADER_PREFIX.length &&
    prefix.every((cell, i) => cell === REQUIRED_HEADER_PREFIX[i]);
  if (!prefixOk || header.length < 4) {
    return { ok: false, error: `unsupported attachment header; expected: ${EXPECTED_HEADER_HINT}` };
  }
  for (let i = 1; i < lines.length; i++) {
    const cells = (lines[i] ?? "").split(",");
    if (cells.length !== header.length) {
      return { ok: false, error: `line ${i + 1} has ${cells.length} columns, header has ${header.length}` };
    }
  }
  return { ok: true };
}
