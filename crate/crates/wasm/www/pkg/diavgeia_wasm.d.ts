/* tslint:disable */
/* eslint-disable */

/**
 * A small in-memory BM25 index, seeded with the bundled sample decisions.
 */
export class Library {
    free(): void;
    [Symbol.dispose](): void;
    add(ada: string, subject: string, organization: string, body: string): void;
    /**
     * `[{ada, organization, subject, body}]`
     */
    documents(): string;
    /**
     * `{neighbors, words: [{text, boilerplate}], boilerplate_share}`
     */
    highlight(text: string, neighbors: number): string;
    is_empty(): boolean;
    len(): number;
    constructor();
    /**
     * `[{ada, score, subject, organization, excerpt}]`
     */
    search(query: string, k: number): string;
}

/**
 * `{adas, amounts, amount_cents, total}`
 */
export function scan(text: string): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_library_free: (a: number, b: number) => void;
    readonly library_add: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number) => [number, number];
    readonly library_documents: (a: number) => [number, number];
    readonly library_highlight: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly library_is_empty: (a: number) => number;
    readonly library_len: (a: number) => number;
    readonly library_new: () => number;
    readonly library_search: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly scan: (a: number, b: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
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
