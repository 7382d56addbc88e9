/* tslint:disable */
/* eslint-disable */

/**
 * Corrupts the built-in test picture and denoises it with the compact
 * relaxation.
 */
export function denoise_demo(size: number, labels: number, lambda: number, iters: number, seed: bigint): string;

/**
 * Random prior with `pieces` bounded pieces and random unaries on `labels`
 * labels, together with `min_j theta[j] + w p(j - i)`. Inputs are multiples
 * of 1/8 (`weight` is rounded), so the comparison with the quadratic scan is
 * exact.
 */
export function envelope_demo(labels: number, pieces: number, weight: number, seed: bigint): string;

/**
 * Per-edge unknowns and rows of the full and compact LPs on a two-node
 * model, for each label count in `labels`.
 */
export function size_table(labels: Uint32Array, pieces: number, seed: bigint): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly denoise_demo: (a: number, b: number, c: number, d: number, e: bigint) => [number, number, number, number];
    readonly envelope_demo: (a: number, b: number, c: number, d: bigint) => [number, number, number, number];
    readonly size_table: (a: number, b: number, c: number, d: bigint) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
