/**
 * Node client for the ebcc compressor.
 *
 * Arrays move through the CLI as flat little-endian float32 files, so the
 * bytes this client produces are identical to what the command line writes
 * for the same inputs.  Point the client at a different interpreter or
 * entry point with EBCC_PYTHON / EBCC_ARGS.
 */

import { spawnSync } from "child_process";
import { mkdtempSync, readFileSync, rmSync, writeFileSync } from "fs";
import { tmpdir } from "os";
import { join } from "path";

export interface CompressOptions {
  /** Range-relative max error target, in (0, 1). Default 0.01. */
  relError?: number;
  /** Base-layer error quantile target, in (0, 1]. Default 1 - 1e-5. */
  q?: number;
  /** Chunk extents [t, p, h, w]; defaults to one 2D slice per field. */
  chunkShape?: number[];
}

export interface DecompressResult {
  data: Float32Array;
  /** Extents [t, p, h, w]; inputs below 4D were left-padded with ones. */
  shape: [number, number, number, number];
}

const MAGIC = Buffer.from("EBCC", "ascii");
const SUPPORTED_VERSION = 1;

function cliCommand(): string[] {
  if (process.env.EBCC_ARGS) {
    return process.env.EBCC_ARGS.split(" ");
  }
  const python = process.env.EBCC_PYTHON ?? "python3";
  return [python, "-m", "ebcc.cli"];
}

function runCli(args: string[]): void {
  const [head, ...rest] = cliCommand();
  const proc = spawnSync(head, [...rest, ...args], { encoding: "utf-8" });
  if (proc.error) {
    throw proc.error;
  }
  if (proc.status !== 0) {
    const detail = (proc.stderr || proc.stdout || "").trim();
    throw new Error(`ebcc exited with code ${proc.status}: ${detail}`);
  }
}

function padShape(shape: number[]): [number, number, number, number] {
  if (shape.length < 1 || shape.length > 4) {
    throw new Error(`shape must have 1-4 extents, got ${shape.length}`);
  }
  const padded = [...Array(4 - shape.length).fill(1), ...shape];
  return padded as [number, number, number, number];
}

/** Read the container's dims without decompressing. */
export function headerShape(buf: Buffer): [number, number, number, number] {
  if (buf.length < 42) {
    throw new Error("buffer shorter than the container header");
  }
  if (!buf.subarray(0, 4).equals(MAGIC)) {
    throw new Error("bad container magic");
  }
  const version = buf.readUInt16LE(4);
  if (version !== SUPPORTED_VERSION) {
    throw new Error(`unsupported container version ${version}`);
  }
  return [
    buf.readUInt32LE(6),
    buf.readUInt32LE(10),
    buf.readUInt32LE(14),
    buf.readUInt32LE(18),
  ];
}

function withTempDir<T>(fn: (dir: string) => T): T {
  const dir = mkdtempSync(join(tmpdir(), "ebcc-"));
  try {
    return fn(dir);
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
}

/**
 * Compress a float32 array; returns the container bytes.
 *
 * Every reconstructed point is within relError * (chunk max - chunk min)
 * of the original.
 */
export function compress(
  data: Float32Array,
  shape: number[],
  opts: CompressOptions = {},
): Buffer {
  const dims = padShape(shape);
  const count = dims.reduce((a, b) => a * b, 1);
  if (count !== data.length) {
    throw new Error(`shape ${shape} needs ${count} values, got ${data.length}`);
  }
  const relError = opts.relError ?? 0.01;
  const q = opts.q ?? 1 - 1e-5;
  return withTempDir((dir) => {
    const rawPath = join(dir, "input.raw");
    const outPath = join(dir, "out.ebcc");
    writeFileSync(rawPath, Buffer.from(data.buffer, data.byteOffset, data.byteLength));
    const args = [
      "compress",
      "--input", rawPath,
      "--shape", dims.join(","),
      "--rel-error", String(relError),
      "--q", String(q),
      "-o", outPath,
    ];
    if (opts.chunkShape) {
      args.push("--chunk", padShape(opts.chunkShape).join(","));
    }
    runCli(args);
    return readFileSync(outPath);
  });
}

/** Decompress container bytes back to a float32 array plus its extents. */
export function decompress(buf: Buffer): DecompressResult {
  const shape = headerShape(buf);
  return withTempDir((dir) => {
    const inPath = join(dir, "in.ebcc");
    const rawPath = join(dir, "out.raw");
    writeFileSync(inPath, buf);
    runCli(["decompress", inPath, "-o", rawPath]);
    const raw = readFileSync(rawPath);
    const data = new Float32Array(raw.buffer, raw.byteOffset, raw.byteLength / 4);
    return { data: new Float32Array(data), shape };
  });
}
