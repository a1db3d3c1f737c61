/** Display formatting. Every number shown in the UI passes through here
 * unchanged except for string rendering, keeping values traceable to the
 * API payload fields they came from. */

export function formatAccuracy(value: number | null | undefined): string {
  if (value === null || value === undefined) return "–";
  return `${(value * 100).toFixed(1)}%`;
}

export function formatConfidence(value: number): string {
  return `${(value * 100).toFixed(1)}%`;
}

export function formatSimilarity(value: number): string {
  return value.toFixed(3);
}

export function formatParamCount(count: number): string {
  if (count >= 1_000_000) return `${(count / 1_000_000).toFixed(1)}M`;
  if (count >= 1_000) return `${(count / 1_000).toFixed(1)}K`;
  return String(count);
}

export function formatThreshold(value: number): string {
  return value.toFixed(2);
}

export function classDisplay(classId: number, label: string | undefined): string {
  return label ? `${classId} ${label}` : String(classId);
}
