/**
 * TypeScript bindings for the `seqform` command-line engine.
 *
 * The bindings never reimplement game logic: every operation shells out to
 * the CLI and exchanges data through its documented file formats
 * (`SFPOLICY v1` policy files and the `keys` listing).  Callback policies
 * are invoked in large batches so the process boundary is amortized even
 * on games with millions of information states.
 */

import { execFile } from 'node:child_process';
import { mkdtemp, rm, writeFile } from 'node:fs/promises';
import { tmpdir } from 'node:os';
import { join } from 'node:path';
import { promisify } from 'node:util';

const execFileAsync = promisify(execFile);

export const GAME_IDS = [
  'dh1', 'dh2', 'dh3', 'adh1', 'adh2', 'adh3', 'pttt', 'apttt',
] as const;
export type GameId = (typeof GAME_IDS)[number];

export type Player = 1 | 2;

/** One information state: its serialized key and legal action cells. */
export interface InfoState {
  readonly key: string;
  readonly actions: readonly number[];
}

/**
 * Batch policy callback: receives a batch of infostate keys together with
 * each key's legal action cells, and returns one probability vector per
 * key (same order, same arity as the action list).  May be async.
 */
export type CallbackPolicy = (
  keys: string[],
  actions: number[][],
) => number[][] | Promise<number[][]>;

/** A full profile: one callback per player (keys do not encode the player). */
export interface BothPlayers {
  player1: CallbackPolicy;
  player2: CallbackPolicy;
}

export interface BindingOptions {
  /** Executable to invoke (default: `seqform`, or `SEQFORM_BIN` env). */
  bin?: string;
  /** Keys per callback invocation (default 4096, the minimum batch size). */
  batchSize?: number;
  /** Passed through as `--threads`. */
  threads?: number;
  /** Passed through as `--cache-dir` (treeplex cache for big games). */
  cacheDir?: string;
}

export interface EvaluationResult {
  expectedValue: number;
  nashGap: number;
  /** Half the Nash gap (the convention used throughout this project). */
  exploitability: number;
  /** Callback rows whose probabilities needed renormalization. */
  renormalized: number;
}

export interface HeadToHeadResult {
  expectedValue: number;
  /** Position-averaged value; only set when both sides supplied both players. */
  symmetrized?: number;
  renormalized: number;
}

const DEFAULT_BATCH = 4096;
const NORMALIZATION_TOL = 1e-6;
/** Deviations at double-rounding scale pass through unchanged so the
 * marshaled policy is bit-identical to the caller's numbers. */
const EXACT_TOL = 1e-12;

function binOf(opts?: BindingOptions): string {
  return opts?.bin ?? process.env.SEQFORM_BIN ?? 'seqform';
}

function commonFlags(opts?: BindingOptions): string[] {
  const flags: string[] = [];
  if (opts?.threads !== undefined) flags.push('--threads', String(opts.threads));
  if (opts?.cacheDir !== undefined) flags.push('--cache-dir', opts.cacheDir);
  return flags;
}

async function runCli(args: string[], opts?: BindingOptions): Promise<string> {
  try {
    const { stdout } = await execFileAsync(binOf(opts), args, {
      maxBuffer: 1 << 30,
    });
    return stdout;
  } catch (err) {
    const e = err as { code?: number; stderr?: string; message: string };
    const detail = e.stderr?.trim() || e.message;
    throw new Error(
      `seqform ${args[0]} failed (exit ${e.code ?? '?'}): ${detail}`,
    );
  }
}

/** Enumerate one player's information states in treeplex (preorder) order. */
export async function infostates(
  gameId: string,
  player: Player,
  opts?: BindingOptions,
): Promise<InfoState[]> {
  const stdout = await runCli(
    ['keys', gameId, String(player), '--actions', ...commonFlags(opts)],
    opts,
  );
  const lines = stdout.split('\n');
  if (lines[lines.length - 1] === '') lines.pop(); // trailing newline only
  return lines.map((line) => {
    const tab = line.indexOf('\t');
    const key = line.slice(0, tab);
    const actions = line
      .slice(tab + 1)
      .split(',')
      .map((c) => Number.parseInt(c, 10));
    return { key, actions };
  });
}

/** Enumerate one player's infostate keys in treeplex order. */
export async function infostateKeys(
  gameId: string,
  player: Player,
  opts?: BindingOptions,
): Promise<string[]> {
  return (await infostates(gameId, player, opts)).map((s) => s.key);
}

function validateRow(row: number[], state: InfoState): number[] {
  if (row.length !== state.actions.length) {
    throw new Error(
      `callback returned ${row.length} probabilities for key ` +
        `"${state.key}" (expected ${state.actions.length})`,
    );
  }
  let sum = 0;
  for (const p of row) {
    if (!Number.isFinite(p) || p < 0) {
      throw new Error(
        `callback returned invalid probability ${p} for key "${state.key}"`,
      );
    }
    sum += p;
  }
  if (Math.abs(sum - 1) <= EXACT_TOL) return row;
  if (Math.abs(sum - 1) > NORMALIZATION_TOL) {
    throw new Error(
      `callback probabilities for key "${state.key}" sum to ${sum} ` +
        `(must be within ${NORMALIZATION_TOL} of 1)`,
    );
  }
  return row.map((p) => p / sum);
}

function wasRenormalized(row: number[]): boolean {
  let sum = 0;
  for (const p of row) sum += p;
  return Math.abs(sum - 1) > EXACT_TOL;
}

/**
 * Materialize a callback policy into an `SFPOLICY v1` text file.
 * Returns the number of rows that had to be renormalized.
 */
export async function materializePolicy(
  gameId: string,
  player: Player,
  policy: CallbackPolicy,
  filePath: string,
  opts?: BindingOptions,
): Promise<number> {
  const states = await infostates(gameId, player, opts);
  const batchSize = opts?.batchSize ?? DEFAULT_BATCH;
  const lines: string[] = [`SFPOLICY v1 ${gameId} ${player}`];
  let renormalized = 0;
  for (let start = 0; start < states.length; start += batchSize) {
    const batch = states.slice(start, start + batchSize);
    const rows = await policy(
      batch.map((s) => s.key),
      batch.map((s) => [...s.actions]),
    );
    if (rows.length !== batch.length) {
      throw new Error(
        `callback returned ${rows.length} rows for a batch of ` +
          `${batch.length} keys (first key "${batch[0].key}")`,
      );
    }
    batch.forEach((state, i) => {
      if (wasRenormalized(rows[i])) renormalized += 1;
      const row = validateRow(rows[i], state);
      lines.push(`${state.key}\t${row.map((p) => String(p)).join(',')}`);
    });
  }
  lines.push('#defaults uniform', '');
  await writeFile(filePath, lines.join('\n'));
  return renormalized;
}

function parseMetric(stdout: string, label: string): number {
  for (const line of stdout.split('\n')) {
    if (line.startsWith(label + ':')) {
      return Number.parseFloat(line.slice(label.length + 1).trim());
    }
  }
  throw new Error(`seqform output missing "${label}"`);
}

async function inTempDir<T>(fn: (dir: string) => Promise<T>): Promise<T> {
  const dir = await mkdtemp(join(tmpdir(), 'seqform-'));
  try {
    return await fn(dir);
  } finally {
    await rm(dir, { recursive: true, force: true });
  }
}

/**
 * Exploitability of the profile (policy1 as player 1, policy2 as player 2),
 * computed by the core engine on the materialized policies.
 */
export async function exploitability(
  gameId: string,
  policy1: CallbackPolicy,
  policy2: CallbackPolicy,
  opts?: BindingOptions,
): Promise<EvaluationResult> {
  return inTempDir(async (dir) => {
    const f1 = join(dir, 'p1.sfpolicy');
    const f2 = join(dir, 'p2.sfpolicy');
    const renormalized =
      (await materializePolicy(gameId, 1, policy1, f1, opts)) +
      (await materializePolicy(gameId, 2, policy2, f2, opts));
    const stdout = await runCli(
      ['expl', gameId, f1, f2, ...commonFlags(opts)],
      opts,
    );
    return {
      expectedValue: parseMetric(stdout, 'expected_value'),
      nashGap: parseMetric(stdout, 'nash_gap'),
      exploitability: parseMetric(stdout, 'exploitability'),
      renormalized,
    };
  });
}

function isBothPlayers(p: CallbackPolicy | BothPlayers): p is BothPlayers {
  return typeof p !== 'function';
}

async function materializeSide(
  gameId: string,
  side: CallbackPolicy | BothPlayers,
  asPlayer: Player,
  filePath: string,
  opts?: BindingOptions,
): Promise<number> {
  if (!isBothPlayers(side)) {
    return materializePolicy(gameId, asPlayer, side, filePath, opts);
  }
  // Write a "both" file: player 1 block, #player 2 marker, player 2 block.
  const tmp1 = filePath + '.1';
  const tmp2 = filePath + '.2';
  const n1 = await materializePolicy(gameId, 1, side.player1, tmp1, opts);
  const n2 = await materializePolicy(gameId, 2, side.player2, tmp2, opts);
  const { readFile } = await import('node:fs/promises');
  const body1 = (await readFile(tmp1, 'utf8')).split('\n').slice(1);
  const body2 = (await readFile(tmp2, 'utf8')).split('\n').slice(1);
  // Drop each block's "#defaults uniform" footer and trailing blank.
  const block1 = body1.filter((l) => l !== '' && !l.startsWith('#'));
  const block2 = body2.filter((l) => l !== '' && !l.startsWith('#'));
  const lines = [
    `SFPOLICY v1 ${gameId} both`,
    ...block1,
    '#player 2',
    ...block2,
    '#defaults uniform',
    '',
  ];
  await writeFile(filePath, lines.join('\n'));
  await rm(tmp1, { force: true });
  await rm(tmp2, { force: true });
  return n1 + n2;
}

/**
 * Head-to-head value of side A vs side B.  When each side supplies both
 * players' callbacks, the position-averaged (symmetrized) value is also
 * returned; self-play symmetrized value is exactly 0.
 */
export async function headToHead(
  gameId: string,
  sideA: CallbackPolicy | BothPlayers,
  sideB: CallbackPolicy | BothPlayers,
  opts?: BindingOptions,
): Promise<HeadToHeadResult> {
  return inTempDir(async (dir) => {
    const fa = join(dir, 'a.sfpolicy');
    const fb = join(dir, 'b.sfpolicy');
    const renormalized =
      (await materializeSide(gameId, sideA, 1, fa, opts)) +
      (await materializeSide(gameId, sideB, 2, fb, opts));
    const stdout = await runCli(
      ['h2h', gameId, fa, fb, ...commonFlags(opts)],
      opts,
    );
    const result: HeadToHeadResult = {
      expectedValue: parseMetric(stdout, 'expected_value'),
      renormalized,
    };
    if (stdout.includes('symmetrized_h2h:')) {
      result.symmetrized = parseMetric(stdout, 'symmetrized_h2h');
    }
    return result;
  });
}

/** Callback that plays uniformly at every information state. */
export const uniformPolicy: CallbackPolicy = (_keys, actions) =>
  actions.map((a) => a.map(() => 1 / a.length));

/** Wrap a key-indexed table of probability vectors as a callback policy. */
export function tabularPolicy(
  table: ReadonlyMap<string, readonly number[]> | Record<string, readonly number[]>,
): CallbackPolicy {
  const get =
    table instanceof Map
      ? (k: string) => table.get(k)
      : (k: string) => (table as Record<string, readonly number[]>)[k];
  return (keys, actions) =>
    keys.map((key, i) => {
      const row = get(key);
      if (row === undefined) {
        return actions[i].map(() => 1 / actions[i].length);
      }
      return [...row];
    });
}
