import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { extractFolder, listImages } from "../src/extract.js";
import { decodeImage } from "../src/image.js";
import { readManifest } from "../src/manifest.js";
import { loadFloat32Matrix } from "../src/npy.js";
import { PRESETS, embedImage } from "../src/presets.js";
import { patternImage, writeCorpus } from "./fixtures.js";

let dir: string;
beforeEach(() => {
  dir = fs.mkdtempSync(path.join(os.tmpdir(), "extract-"));
});
afterEach(() => {
  fs.rmSync(dir, { recursive: true, force: true });
});

describe("embedImage", () => {
  it("clip rows are unit norm, dinov2 blocks are unit norm", () => {
    const img = patternImage("norms");
    const clip = embedImage(img, PRESETS.clip);
    expect(clip.length).toBe(768);
    const n = Math.sqrt(clip.reduce((a, v) => a + v * v, 0));
    expect(Math.abs(n - 1)).toBeLessThan(1e-12);

    const dino = embedImage(img, PRESETS.dinov2);
    expect(dino.length).toBe(3072);
    for (let b = 0; b < 3; b++) {
      let acc = 0;
      for (let j = b * 1024; j < (b + 1) * 1024; j++) acc += dino[j] ** 2;
      expect(Math.abs(Math.sqrt(acc) - 1)).toBeLessThan(1e-12);
    }
  });

  it("distinct images get distinct rows, reruns identical", () => {
    const a = embedImage(patternImage("a"), PRESETS.clip);
    const b = embedImage(patternImage("b"), PRESETS.clip);
    const a2 = embedImage(patternImage("a"), PRESETS.clip);
    expect(Array.from(a)).toEqual(Array.from(a2));
    expect(Array.from(a)).not.toEqual(Array.from(b));
  });
});

describe("extractFolder", () => {
  it("orders rows by filename and records a manifest entry", () => {
    writeCorpus(path.join(dir, "imgs"), 6);
    const manifest = path.join(dir, "manifest.json");
    const out = path.join(dir, "imgs.npy");
    const res = extractFolder(path.join(dir, "imgs"), PRESETS.clip, out,
      manifest, { dataset: "toy" });
    expect(res.rows).toBe(6);
    expect(res.skipped).toEqual([]);

    const m = loadFloat32Matrix(out);
    expect([m.rows, m.cols]).toEqual([6, 768]);
    // row 2 must be exactly the embedding of the third file in sort order
    // jpeg members are lossy, so re-decode the actual bytes on disk
    const files = listImages(path.join(dir, "imgs"));
    const expected = Float32Array.from(
      embedImage(decodeImage(files[2]), PRESETS.clip));
    const got = m.data.slice(2 * 768, 3 * 768);
    expect(Array.from(got)).toEqual(Array.from(expected));

    const records = readManifest(manifest);
    expect(records).toHaveLength(1);
    expect(records[0]).toMatchObject({
      dataset: "toy", condition: "clean", severity: null,
      path: "imgs.npy", backbone: "clip-vit-l14-336",
    });
  });

  it("re-running replaces the manifest entry instead of duplicating", () => {
    writeCorpus(path.join(dir, "imgs"), 3);
    const manifest = path.join(dir, "m.json");
    const out = path.join(dir, "x.npy");
    extractFolder(path.join(dir, "imgs"), PRESETS.clip, out, manifest, { dataset: "d" });
    extractFolder(path.join(dir, "imgs"), PRESETS.clip, out, manifest, { dataset: "d" });
    expect(readManifest(manifest)).toHaveLength(1);
  });

  it("skips undecodable files with a warning and records them", () => {
    writeCorpus(path.join(dir, "imgs"), 4);
    fs.writeFileSync(path.join(dir, "imgs", "broken.png"), "not a png at all");
    const warn = vi.spyOn(console, "warn").mockImplementation(() => {});
    try {
      const manifest = path.join(dir, "m.json");
      const res = extractFolder(path.join(dir, "imgs"), PRESETS.clip,
        path.join(dir, "x.npy"), manifest);
      expect(res.rows).toBe(4);
      expect(res.skipped).toEqual(["broken.png"]);
      expect(warn).toHaveBeenCalledOnce();
      expect(readManifest(manifest)[0].skipped).toEqual(["broken.png"]);
    } finally {
      warn.mockRestore();
    }
  });

  it("errors on an empty directory", () => {
    fs.mkdirSync(path.join(dir, "empty"));
    expect(() => extractFolder(path.join(dir, "empty"), PRESETS.clip,
      path.join(dir, "x.npy"))).toThrow(/no images/);
  });

  it("errors when every image is undecodable", () => {
    fs.mkdirSync(path.join(dir, "bad"));
    fs.writeFileSync(path.join(dir, "bad", "a.png"), "junk");
    const warn = vi.spyOn(console, "warn").mockImplementation(() => {});
    try {
      expect(() => extractFolder(path.join(dir, "bad"), PRESETS.clip,
        path.join(dir, "x.npy"))).toThrow(/failed to decode/);
    } finally {
      warn.mockRestore();
    }
  });

  it("batch size does not leak into the output", () => {
    // 6 images with batch sizes 32 (one batch) and a forced tiny batch
    writeCorpus(path.join(dir, "imgs"), 6);
    const out1 = path.join(dir, "b32.npy");
    const out2 = path.join(dir, "b2.npy");
    extractFolder(path.join(dir, "imgs"), PRESETS.clip, out1);
    extractFolder(path.join(dir, "imgs"), { ...PRESETS.clip, batchSize: 2 }, out2);
    expect(fs.readFileSync(out1).equals(fs.readFileSync(out2))).toBe(true);
  });
});
