/**
 * Non-fatal validation of FASTEMB1 files, mirroring `fast inspect`:
 * header sanity, label ranges, NaN/Inf scanning per record. Problems are
 * collected into the report instead of thrown, so a corrupt file still
 * yields a useful diagnosis.
 */

import * as fs from 'fs';

import { HEADER_BYTES, MAGIC } from './fastemb';

export interface VerifyReport {
  ok: boolean;
  path: string;
  n?: number;
  d?: number;
  c?: number;
  classHistogram?: number[];
  issues: string[];
}

export function verify(path: string): VerifyReport {
  const report: VerifyReport = { ok: false, path, issues: [] };
  let buf: Buffer;
  try {
    buf = fs.readFileSync(path);
  } catch (err) {
    report.issues.push(`cannot read file: ${(err as Error).message}`);
    return report;
  }
  if (buf.length < HEADER_BYTES) {
    report.issues.push(`file too short for a header (${buf.length} bytes)`);
    return report;
  }
  if (buf.toString('ascii', 0, 8) !== MAGIC) {
    report.issues.push(`bad magic ${JSON.stringify(buf.toString('ascii', 0, 8))}`);
    return report;
  }
  const n = buf.readUInt32LE(8);
  const d = buf.readUInt32LE(12);
  const c = buf.readUInt32LE(16);
  report.n = n;
  report.d = d;
  report.c = c;
  if (n < 1 || d < 1 || c < 2) {
    report.issues.push(`invalid header values n=${n} d=${d} c=${c}`);
    return report;
  }

  const expected = HEADER_BYTES + n * (4 + 4 * d);
  if (buf.length < expected) {
    report.issues.push(
      `corruption: payload truncated (expected ${expected} bytes, got ${buf.length})`,
    );
  } else if (buf.length > expected) {
    report.issues.push(`${buf.length - expected} trailing bytes`);
  }

  const histogram = new Array<number>(c).fill(0);
  const whole = Math.min(n, Math.floor((buf.length - HEADER_BYTES) / (4 + 4 * d)));
  for (let i = 0; i < whole; i++) {
    const off = HEADER_BYTES + i * (4 + 4 * d);
    const label = buf.readUInt32LE(off);
    if (label >= c) {
      report.issues.push(`record ${i}: label ${label} out of range for c=${c}`);
    } else {
      histogram[label] += 1;
    }
    for (let j = 0; j < d; j++) {
      const v = buf.readFloatLE(off + 4 + 4 * j);
      if (!Number.isFinite(v)) {
        report.issues.push(`record ${i}: non-finite feature at dim ${j}`);
        break;
      }
    }
  }
  report.classHistogram = histogram;
  report.ok = report.issues.length === 0;
  return report;
}

export function formatReport(report: VerifyReport): string {
  const lines: string[] = [];
  if (report.n !== undefined) {
    lines.push(`${report.path}: n=${report.n} d=${report.d} c=${report.c}`);
  } else {
    lines.push(`${report.path}: unreadable`);
  }
  if (report.classHistogram) {
    report.classHistogram.forEach((count, cls) => {
      lines.push(`  class ${cls}: ${count}`);
    });
  }
  if (report.ok) {
    lines.push('ok');
  } else {
    for (const issue of report.issues) lines.push(`PROBLEM: ${issue}`);
  }
  return lines.join('\n');
}
