/* tslint:disable */
/* eslint-disable */

/**
 * Benjamin-Ono flow from a Poisson datum, optionally rotated on the first mode.
 */
export class Simulation {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * `|H_total(t) - H_total(0)| / |H_total(0)|`.
     */
    energyDrift(): number;
    gaps(n_max: number): Float64Array;
    constructor(radii: Float64Array, alphas: Float64Array, modes: number, dt: number, epsilon: number);
    profile(points: number): Float64Array;
    step(steps: number): void;
    time(): number;
}

export function laxGaps(radii: Float64Array, alphas: Float64Array, modes: number, n_max: number): Float64Array;

export function poissonProfile(radii: Float64Array, alphas: Float64Array, modes: number, points: number): Float64Array;

export function stabilityCertificate(gamma0: Float64Array, epsilon: number, e_min: number, e_max: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_simulation_free: (a: number, b: number) => void;
    readonly laxGaps: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly poissonProfile: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly simulation_energyDrift: (a: number) => number;
    readonly simulation_gaps: (a: number, b: number) => [number, number, number, number];
    readonly simulation_new: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number];
    readonly simulation_profile: (a: number, b: number) => [number, number];
    readonly simulation_step: (a: number, b: number) => [number, number];
    readonly simulation_time: (a: number) => number;
    readonly stabilityCertificate: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
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
