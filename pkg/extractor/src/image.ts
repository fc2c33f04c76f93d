/**
 * Minimal image IO: decode JPEG/PNG to RGBA, encode back, resize, compare.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import jpeg from "jpeg-js";
import { PNG } from "pngjs";

export interface RgbaImage {
  width: number;
  height: number;
  /** RGBA, row-major, 4 bytes per pixel. */
  data: Uint8Array;
}

export const IMAGE_EXTENSIONS = new Set([".png", ".jpg", ".jpeg"]);

export class DecodeError extends Error {}

export function decodeImage(filePath: string): RgbaImage {
  const ext = path.extname(filePath).toLowerCase();
  const buf = fs.readFileSync(filePath);
  try {
    if (ext === ".png") {
      const png = PNG.sync.read(buf);
      return { width: png.width, height: png.height, data: new Uint8Array(png.data) };
    }
    if (ext === ".jpg" || ext === ".jpeg") {
      const out = jpeg.decode(buf, { useTArray: true, maxMemoryUsageInMB: 512 });
      return { width: out.width, height: out.height, data: new Uint8Array(out.data) };
    }
  } catch (err) {
    throw new DecodeError(`cannot decode ${filePath}: ${(err as Error).message}`);
  }
  throw new DecodeError(`unsupported image extension ${ext} for ${filePath}`);
}

export function encodePng(img: RgbaImage): Buffer {
  const png = new PNG({ width: img.width, height: img.height });
  Buffer.from(img.data.buffer, img.data.byteOffset, img.data.byteLength).copy(png.data);
  return PNG.sync.write(png);
}

export function encodeJpeg(img: RgbaImage, quality: number): Buffer {
  const raw = {
    width: img.width,
    height: img.height,
    data: Buffer.from(img.data.buffer, img.data.byteOffset, img.data.byteLength),
  };
  return jpeg.encode(raw, quality).data;
}

/** Bilinear resample to the target size. Alpha forced opaque. */
export function resize(img: RgbaImage, width: number, height: number): RgbaImage {
  const out = new Uint8Array(width * height * 4);
  const sx = img.width / width;
  const sy = img.height / height;
  for (let y = 0; y < height; y++) {
    // sample at pixel centers to keep the map symmetric
    const fy = Math.min(Math.max((y + 0.5) * sy - 0.5, 0), img.height - 1);
    const y0 = Math.floor(fy);
    const y1 = Math.min(y0 + 1, img.height - 1);
    const wy = fy - y0;
    for (let x = 0; x < width; x++) {
      const fx = Math.min(Math.max((x + 0.5) * sx - 0.5, 0), img.width - 1);
      const x0 = Math.floor(fx);
      const x1 = Math.min(x0 + 1, img.width - 1);
      const wx = fx - x0;
      const o = (y * width + x) * 4;
      for (let c = 0; c < 3; c++) {
        const p00 = img.data[(y0 * img.width + x0) * 4 + c];
        const p01 = img.data[(y0 * img.width + x1) * 4 + c];
        const p10 = img.data[(y1 * img.width + x0) * 4 + c];
        const p11 = img.data[(y1 * img.width + x1) * 4 + c];
        const top = p00 + (p01 - p00) * wx;
        const bot = p10 + (p11 - p10) * wx;
        out[o + c] = Math.round(top + (bot - top) * wy);
      }
      out[o + 3] = 255;
    }
  }
  return { width, height, data: out };
}

/**
 * Box-filter resample: every output pixel is the exact area average of its
 * source footprint.  The right tool for shrinking by large factors, where
 * point-sampled bilinear would alias badly.
 */
export function areaResize(img: RgbaImage, width: number, height: number): RgbaImage {
  const out = new Uint8Array(width * height * 4);
  const sx = img.width / width;
  const sy = img.height / height;
  for (let y = 0; y < height; y++) {
    const top = y * sy;
    const bottom = (y + 1) * sy;
    for (let x = 0; x < width; x++) {
      const left = x * sx;
      const right = (x + 1) * sx;
      const acc = [0, 0, 0];
      let area = 0;
      for (let yy = Math.floor(top); yy < bottom; yy++) {
        const hy = Math.min(bottom, yy + 1) - Math.max(top, yy);
        if (hy <= 0) continue;
        for (let xx = Math.floor(left); xx < right; xx++) {
          const wx = Math.min(right, xx + 1) - Math.max(left, xx);
          if (wx <= 0) continue;
          const w = hy * wx;
          const o = (Math.min(yy, img.height - 1) * img.width
            + Math.min(xx, img.width - 1)) * 4;
          acc[0] += w * img.data[o];
          acc[1] += w * img.data[o + 1];
          acc[2] += w * img.data[o + 2];
          area += w;
        }
      }
      const o = (y * width + x) * 4;
      out[o] = Math.round(acc[0] / area);
      out[o + 1] = Math.round(acc[1] / area);
      out[o + 2] = Math.round(acc[2] / area);
      out[o + 3] = 255;
    }
  }
  return { width, height, data: out };
}

/** Mean squared error over RGB channels, images resized to match if needed. */
export function pixelMse(a: RgbaImage, b: RgbaImage): number {
  const bb = a.width === b.width && a.height === b.height
    ? b
    : resize(b, a.width, a.height);
  let acc = 0;
  const n = a.width * a.height;
  for (let i = 0; i < n; i++) {
    for (let c = 0; c < 3; c++) {
      const d = a.data[i * 4 + c] - bb.data[i * 4 + c];
      acc += d * d;
    }
  }
  return acc / (n * 3);
}
