/**
 * Turn an image folder into one .npy embedding matrix plus a manifest entry.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import { IMAGE_EXTENSIONS, decodeImage } from "./image.js";
import { ManifestRecord, appendManifest } from "./manifest.js";
import { saveFloat32Matrix } from "./npy.js";
import { BackbonePreset, embedImage } from "./presets.js";

export interface ExtractMeta {
  dataset?: string;
  condition?: string;
  severity?: number | null;
}

export interface ExtractResult {
  rows: number;
  dim: number;
  outPath: string;
  /** Basenames of files that failed to decode and were skipped. */
  skipped: string[];
}

/** Image files of a directory in stable filename-sorted order. */
export function listImages(dir: string): string[] {
  const names = fs.readdirSync(dir)
    .filter((n) => IMAGE_EXTENSIONS.has(path.extname(n).toLowerCase()))
    .sort();
  return names.map((n) => path.join(dir, n));
}

export function extractFolder(
  imageDir: string,
  preset: BackbonePreset,
  outPath: string,
  manifestPath?: string,
  meta: ExtractMeta = {},
): ExtractResult {
  const files = listImages(imageDir);
  if (files.length === 0) {
    throw new Error(`${imageDir}: no images found (want png/jpg/jpeg)`);
  }

  const vectors: Float64Array[] = [];
  const skipped: string[] = [];
  // batched like the real backbone would be; order stays filename order
  for (let start = 0; start < files.length; start += preset.batchSize) {
    const batch = files.slice(start, start + preset.batchSize);
    for (const file of batch) {
      try {
        vectors.push(embedImage(decodeImage(file), preset));
      } catch (err) {
        console.warn(`skipping ${file}: ${(err as Error).message}`);
        skipped.push(path.basename(file));
      }
    }
  }
  if (vectors.length === 0) {
    throw new Error(`${imageDir}: every image failed to decode`);
  }

  const rows = vectors.length;
  const flat = new Float32Array(rows * preset.outputDim);
  vectors.forEach((v, i) => flat.set(Float32Array.from(v), i * preset.outputDim));
  saveFloat32Matrix(outPath, flat, rows, preset.outputDim);

  if (manifestPath) {
    const record: ManifestRecord = {
      dataset: meta.dataset ?? path.basename(imageDir),
      condition: meta.condition ?? "clean",
      severity: meta.severity ?? null,
      path: path.relative(path.dirname(manifestPath), outPath) || path.basename(outPath),
      backbone: preset.name,
    };
    if (skipped.length > 0) record.skipped = skipped;
    appendManifest(manifestPath, record);
  }
  return { rows, dim: preset.outputDim, outPath, skipped };
}
