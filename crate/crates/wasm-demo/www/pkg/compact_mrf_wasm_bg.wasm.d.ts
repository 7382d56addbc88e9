/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const denoise_demo: (a: number, b: number, c: number, d: number, e: bigint) => [number, number, number, number];
export const envelope_demo: (a: number, b: number, c: number, d: bigint) => [number, number, number, number];
export const size_table: (a: number, b: number, c: number, d: bigint) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_start: () => void;
