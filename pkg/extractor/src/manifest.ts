/**
 * Dataset manifest records in the shape swdist's loader expects: a JSON
 * array of {dataset, condition, severity, path, backbone} objects, where
 * the clean condition carries severity null and paths are relative to the
 * manifest's directory.  Extra keys (like skipped) are preserved and
 * ignored by the consumer.
 */

import * as fs from "node:fs";
import * as path from "node:path";

export interface ManifestRecord {
  dataset: string;
  condition: string;
  severity: number | null;
  path: string;
  backbone: string;
  /** Images that could not be decoded and were left out of the matrix. */
  skipped?: string[];
}

export function readManifest(manifestPath: string): ManifestRecord[] {
  if (!fs.existsSync(manifestPath)) return [];
  const raw = JSON.parse(fs.readFileSync(manifestPath, "utf8"));
  if (!Array.isArray(raw)) {
    throw new Error(`${manifestPath}: manifest must be a JSON array`);
  }
  return raw as ManifestRecord[];
}

/**
 * Append one record, replacing any existing record with the same
 * (dataset, condition, severity, backbone) so reruns do not duplicate.
 * The write is atomic.
 */
export function appendManifest(manifestPath: string, record: ManifestRecord): void {
  const records = readManifest(manifestPath).filter(
    (r) => !(r.dataset === record.dataset && r.condition === record.condition
      && r.severity === record.severity && r.backbone === record.backbone),
  );
  records.push(record);
  const tmp = manifestPath + `.tmp-${process.pid}`;
  fs.mkdirSync(path.dirname(manifestPath), { recursive: true });
  fs.writeFileSync(tmp, JSON.stringify(records, null, 2) + "\n");
  fs.renameSync(tmp, manifestPath);
}
