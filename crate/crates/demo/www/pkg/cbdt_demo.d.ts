/* tslint:disable */
/* eslint-disable */

export class Demo {
    free(): void;
    [Symbol.dispose](): void;
    modelJson(): string;
    constructor();
    /**
     * Rules explaining the last trained model; returns JSON.
     */
    rules(depth: number, min_support: number): string;
    /**
     * Train on freshly simulated data; returns the summary as JSON.
     */
    train(options_json: string): string;
}

/**
 * Default training options as JSON, for initializing the form.
 */
export function defaultOptions(): string;

export function efficiencyAdjustedPehe(pehe_sqrt: number, train_seconds: number, infer_ms: number): number;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_demo_free: (a: number, b: number) => void;
    readonly defaultOptions: () => [number, number, number, number];
    readonly demo_modelJson: (a: number) => [number, number, number, number];
    readonly demo_new: () => number;
    readonly demo_rules: (a: number, b: number, c: number) => [number, number, number, number];
    readonly demo_train: (a: number, b: number, c: number) => [number, number, number, number];
    readonly efficiencyAdjustedPehe: (a: number, b: number, c: number) => [number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
