/**
 * Float32 .npy matrices, byte-compatible with numpy's format version 1.0.
 *
 * The header is the literal dict numpy writes: keys in the order descr,
 * fortran_order, shape, a trailing comma inside the braces, space padding
 * so that magic+header is a multiple of 64 bytes, closing newline.
 */

import * as fs from "node:fs";
import * as path from "node:path";

const MAGIC = Buffer.from("\x93NUMPY", "latin1");

export function buildHeader(rows: number, cols: number): Buffer {
  const dict = `{'descr': '<f4', 'fortran_order': False, 'shape': (${rows}, ${cols}), }`;
  // 6 magic + 2 version + 2 length field + header must be 64-aligned
  const base = MAGIC.length + 2 + 2;
  const total = Math.ceil((base + dict.length + 1) / 64) * 64;
  const padded = dict + " ".repeat(total - base - dict.length - 1) + "\n";
  const head = Buffer.alloc(base + padded.length);
  MAGIC.copy(head, 0);
  head[6] = 1; // major version
  head[7] = 0; // minor version
  head.writeUInt16LE(padded.length, 8);
  head.write(padded, 10, "latin1");
  return head;
}

/** Write a row-major float32 matrix; the write is atomic (temp + rename). */
export function saveFloat32Matrix(
  filePath: string, values: Float32Array, rows: number, cols: number,
): void {
  if (values.length !== rows * cols) {
    throw new Error(`expected ${rows * cols} values, got ${values.length}`);
  }
  const header = buildHeader(rows, cols);
  const payload = Buffer.from(values.buffer, values.byteOffset, values.byteLength);
  const tmp = filePath + `.tmp-${process.pid}`;
  fs.mkdirSync(path.dirname(filePath), { recursive: true });
  fs.writeFileSync(tmp, Buffer.concat([header, payload]));
  fs.renameSync(tmp, filePath);
}

export interface NpyMatrix {
  rows: number;
  cols: number;
  data: Float32Array;
}

/** Reader for round-trip tests; handles exactly what the writer emits. */
export function loadFloat32Matrix(filePath: string): NpyMatrix {
  const buf = fs.readFileSync(filePath);
  if (!buf.subarray(0, 6).equals(MAGIC)) {
    throw new Error(`${filePath}: not an .npy file`);
  }
  const headerLen = buf.readUInt16LE(8);
  const header = buf.subarray(10, 10 + headerLen).toString("latin1");
  const m = header.match(
    /\{'descr': '([^']+)', 'fortran_order': (False|True), 'shape': \((\d+), (\d+)\), \}/,
  );
  if (!m) throw new Error(`${filePath}: unrecognized header ${header.trim()}`);
  if (m[1] !== "<f4" || m[2] !== "False") {
    throw new Error(`${filePath}: expected C-order <f4, got ${m[1]}/${m[2]}`);
  }
  const rows = parseInt(m[3], 10);
  const cols = parseInt(m[4], 10);
  const body = buf.subarray(10 + headerLen);
  if (body.length !== rows * cols * 4) {
    throw new Error(`${filePath}: payload is ${body.length} bytes, want ${rows * cols * 4}`);
  }
  // copy to guarantee alignment
  const data = new Float32Array(rows * cols);
  for (let i = 0; i < data.length; i++) data[i] = body.readFloatLE(i * 4);
  return { rows, cols, data };
}
