/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_library_free: (a: number, b: number) => void;
export const library_add: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number) => [number, number];
export const library_documents: (a: number) => [number, number];
export const library_highlight: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const library_is_empty: (a: number) => number;
export const library_len: (a: number) => number;
export const library_new: () => number;
export const library_search: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const scan: (a: number, b: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
