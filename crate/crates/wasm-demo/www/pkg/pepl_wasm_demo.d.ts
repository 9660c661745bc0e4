/* tslint:disable */
/* eslint-disable */

/**
 * Two synthetic images with their semantic maps; rectangles pasted from
 * `b` into `a` report semantic and area-based label weights.
 */
export class MixExplorer {
    free(): void;
    [Symbol.dispose](): void;
    heatmap_rgba(which: number): Uint8Array;
    height(): number;
    image_rgba(which: number): Uint8Array;
    /**
     * `[y0, x0, y1, x1]` of the marker in image `which`.
     */
    marker(which: number): Uint32Array;
    mix(y0: number, x0: number, y1: number, x1: number): MixOutcome;
    constructor(seed: number, class_a: number, class_b: number);
    width(): number;
}

export class MixOutcome {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    area(): number;
    rgba(): Uint8Array;
    rho_a(): number;
    rho_b(): number;
}

/**
 * Threshold statistics of a simulated learner whose confidence grows over
 * time, classes maturing at different speeds.
 */
export class ThresholdTrace {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Row-major `steps × num_classes`.
     */
    class_thresholds(): Float64Array;
    num_classes(): number;
    selection_rate(): Float64Array;
    steps(): number;
    tau(): Float64Array;
}

/**
 * Per-step learning rates of a schedule.
 */
export function lr_curve(initial: number, step_period: number, decay: number, cosine_tail: number, total_epochs: number, steps_per_epoch: number): Float64Array;

export function simulate_thresholds(num_classes: number, beta: number, steps: number, batch: number, seed: number): ThresholdTrace;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_mixexplorer_free: (a: number, b: number) => void;
    readonly __wbg_mixoutcome_free: (a: number, b: number) => void;
    readonly __wbg_thresholdtrace_free: (a: number, b: number) => void;
    readonly lr_curve: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number];
    readonly mixexplorer_heatmap_rgba: (a: number, b: number) => [number, number];
    readonly mixexplorer_height: (a: number) => number;
    readonly mixexplorer_image_rgba: (a: number, b: number) => [number, number];
    readonly mixexplorer_marker: (a: number, b: number) => [number, number];
    readonly mixexplorer_mix: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
    readonly mixexplorer_new: (a: number, b: number, c: number) => [number, number, number];
    readonly mixexplorer_width: (a: number) => number;
    readonly mixoutcome_area: (a: number) => number;
    readonly mixoutcome_rgba: (a: number) => [number, number];
    readonly mixoutcome_rho_a: (a: number) => number;
    readonly mixoutcome_rho_b: (a: number) => number;
    readonly simulate_thresholds: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
    readonly thresholdtrace_class_thresholds: (a: number) => [number, number];
    readonly thresholdtrace_num_classes: (a: number) => number;
    readonly thresholdtrace_selection_rate: (a: number) => [number, number];
    readonly thresholdtrace_steps: (a: number) => number;
    readonly thresholdtrace_tau: (a: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __externref_table_dealloc: (a: number) => void;
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
