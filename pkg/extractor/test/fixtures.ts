/** Deterministic synthetic images for tests: gradients + texture + noise. */

import * as fs from "node:fs";
import * as path from "node:path";

import { RgbaImage, encodeJpeg, encodePng } from "../src/image.js";
import { Rng } from "../src/rng.js";

export function patternImage(seed: string, width = 48, height = 48): RgbaImage {
  const rng = new Rng(`fixture:${seed}`);
  const fx = 1 + Math.floor(rng.uniform() * 5);
  const fy = 1 + Math.floor(rng.uniform() * 5);
  const phase = rng.uniform() * Math.PI * 2;
  const base = [rng.uniform() * 128, rng.uniform() * 128, rng.uniform() * 128];
  const data = new Uint8Array(width * height * 4);
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      const o = (y * width + x) * 4;
      const wave = 64 * Math.sin((fx * x * Math.PI) / 8 + phase)
        * Math.cos((fy * y * Math.PI) / 8);
      const grad = (96 * x) / width + (64 * y) / height;
      for (let c = 0; c < 3; c++) {
        const v = base[c] + grad + wave + 24 * rng.gauss();
        data[o + c] = v < 0 ? 0 : v > 255 ? 255 : Math.round(v);
      }
      data[o + 3] = 255;
    }
  }
  return { width, height, data };
}

/** Write n images (png, with every fourth a jpeg) and return the dir. */
export function writeCorpus(dir: string, n: number): string[] {
  fs.mkdirSync(dir, { recursive: true });
  const files: string[] = [];
  for (let i = 0; i < n; i++) {
    const img = patternImage(`img${i}`);
    const name = `img${String(i).padStart(2, "0")}`;
    const file = i % 4 === 3
      ? path.join(dir, `${name}.jpg`)
      : path.join(dir, `${name}.png`);
    fs.writeFileSync(
      file,
      file.endsWith(".jpg") ? encodeJpeg(img, 95) : encodePng(img),
    );
    files.push(file);
  }
  return files;
}
