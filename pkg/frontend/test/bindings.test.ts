import { execFile } from 'node:child_process';
import { mkdtemp, rm, writeFile } from 'node:fs/promises';
import { tmpdir } from 'node:os';
import { join } from 'node:path';
import { promisify } from 'node:util';
import { afterAll, describe, expect, it } from 'vitest';

import {
  GAME_IDS,
  exploitability,
  headToHead,
  infostateKeys,
  infostates,
  materializePolicy,
  tabularPolicy,
  uniformPolicy,
  type CallbackPolicy,
  type InfoState,
} from '../src/index.js';

const execFileAsync = promisify(execFile);
const BIN = process.env.SEQFORM_BIN ?? 'seqform';

const tempDirs: string[] = [];
afterAll(async () => {
  await Promise.all(tempDirs.map((d) => rm(d, { recursive: true, force: true })));
});

async function tempDir(): Promise<string> {
  const d = await mkdtemp(join(tmpdir(), 'seqform-test-'));
  tempDirs.push(d);
  return d;
}

/** Deterministic PRNG (mulberry32) so the 20 random policies are frozen. */
function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

/** Random table over the given infostates with rows normalized once. */
function randomTable(
  states: InfoState[],
  rand: () => number,
): Map<string, number[]> {
  const table = new Map<string, number[]>();
  for (const s of states) {
    const raw = s.actions.map(() => 0.05 + rand());
    const sum = raw.reduce((x, y) => x + y, 0);
    table.set(
      s.key,
      raw.map((p) => p / sum),
    );
  }
  return table;
}

/** Write an SFPOLICY file directly (the non-callback reference path). */
async function writePolicyFile(
  path: string,
  gameId: string,
  player: 1 | 2,
  states: InfoState[],
  table: Map<string, number[]>,
): Promise<void> {
  const lines = [`SFPOLICY v1 ${gameId} ${player}`];
  for (const s of states) {
    const row = table.get(s.key)!;
    lines.push(`${s.key}\t${row.map((p) => String(p)).join(',')}`);
  }
  lines.push('#defaults uniform', '');
  await writeFile(path, lines.join('\n'));
}

function parseMetric(stdout: string, label: string): number {
  const line = stdout.split('\n').find((l) => l.startsWith(label + ':'));
  if (!line) throw new Error(`missing ${label} in: ${stdout}`);
  return Number.parseFloat(line.slice(label.length + 1).trim());
}

describe('infostate enumeration', () => {
  it('matches the known dh2 key counts', async () => {
    expect((await infostateKeys('dh2', 1)).length).toBe(17);
    expect((await infostateKeys('dh2', 2)).length).toBe(53);
  });

  it('starts at the root key (empty string) and is stable across calls', async () => {
    const a = await infostateKeys('dh2', 2);
    const b = await infostateKeys('dh2', 2);
    expect(a[0]).toBe('');
    expect(a).toEqual(b);
  });

  it('reports legal action arities consistent with the key depth', async () => {
    for (const s of await infostates('dh2', 1)) {
      const tokens = s.key.length / 2; // single-digit cells on side <= 3
      expect(s.actions.length).toBe(4 - tokens);
    }
  });

  it('rejects unknown game ids', async () => {
    await expect(infostateKeys('dh9' as never, 1)).rejects.toThrow(/exit 3/);
  });
});

describe('exploitability', () => {
  it('uniform callback matches the core uniform profile within 1e-9', async () => {
    const res = await exploitability('dh2', uniformPolicy, uniformPolicy);
    // Cross-check against the core evaluating an all-defaults policy file.
    const dir = await tempDir();
    const f = join(dir, 'u.sfpolicy');
    await writeFile(f, 'SFPOLICY v1 dh2 both\n#player 2\n#defaults uniform\n');
    const { stdout } = await execFileAsync(BIN, ['expl', 'dh2', f, f]);
    expect(Math.abs(res.exploitability - parseMetric(stdout, 'exploitability')))
      .toBeLessThanOrEqual(1e-9);
    expect(Math.abs(res.exploitability - 0.625)).toBeLessThanOrEqual(1e-9);
    expect(Math.abs(res.nashGap - 1.25)).toBeLessThanOrEqual(1e-9);
    expect(res.renormalized).toBe(0);
  });

  it('equals core results bit-for-bit for 20 random tabular policies', async () => {
    const s1 = await infostates('dh2', 1);
    const s2 = await infostates('dh2', 2);
    const rand = mulberry32(20260826);
    const dir = await tempDir();
    for (let trial = 0; trial < 20; trial++) {
      const t1 = randomTable(s1, rand);
      const t2 = randomTable(s2, rand);
      // Reference: files written directly, evaluated by the core CLI.
      const f1 = join(dir, `t${trial}-p1.sfpolicy`);
      const f2 = join(dir, `t${trial}-p2.sfpolicy`);
      await writePolicyFile(f1, 'dh2', 1, s1, t1);
      await writePolicyFile(f2, 'dh2', 2, s2, t2);
      const expl = await execFileAsync(BIN, ['expl', 'dh2', f1, f2]);
      const h2h = await execFileAsync(BIN, ['h2h', 'dh2', f1, f2]);
      // Bindings: the same tables marshaled through batch callbacks.
      const viaCallbacks = await exploitability(
        'dh2',
        tabularPolicy(t1),
        tabularPolicy(t2),
      );
      const h2hViaCallbacks = await headToHead(
        'dh2',
        tabularPolicy(t1),
        tabularPolicy(t2),
      );
      expect(viaCallbacks.expectedValue)
        .toBe(parseMetric(expl.stdout, 'expected_value'));
      expect(viaCallbacks.nashGap).toBe(parseMetric(expl.stdout, 'nash_gap'));
      expect(viaCallbacks.exploitability)
        .toBe(parseMetric(expl.stdout, 'exploitability'));
      expect(viaCallbacks.renormalized).toBe(0);
      expect(h2hViaCallbacks.expectedValue)
        .toBe(parseMetric(h2h.stdout, 'expected_value'));
    }
  }, 120_000);

  it('renormalizes small deviations and counts them', async () => {
    const slightlyOff: CallbackPolicy = (_keys, actions) =>
      actions.map((a) => a.map(() => (1 + 5e-7) / a.length));
    const res = await exploitability('dh2', slightlyOff, uniformPolicy);
    expect(res.renormalized).toBe(17); // every player-1 infoset
    expect(Math.abs(res.exploitability - 0.625)).toBeLessThanOrEqual(1e-9);
  });

  it('rejects a negative probability, naming the key', async () => {
    const bad: CallbackPolicy = (keys, actions) =>
      actions.map((a, i) =>
        keys[i] === '0o'
          ? a.map((_, j) => (j === 0 ? -0.5 : 1.5 / (a.length - 1)))
          : a.map(() => 1 / a.length),
      );
    await expect(exploitability('dh2', uniformPolicy, bad)).rejects.toThrow(
      /invalid probability .* "0o"/,
    );
  });

  it('rejects wrong-arity rows, naming the key', async () => {
    const bad: CallbackPolicy = (_keys, actions) =>
      actions.map((a) => a.map(() => 1 / a.length).concat([0]));
    await expect(exploitability('dh2', bad, uniformPolicy)).rejects.toThrow(
      /returned 5 probabilities for key ""/,
    );
  });

  it('rejects badly unnormalized rows', async () => {
    const bad: CallbackPolicy = (_keys, actions) =>
      actions.map((a) => a.map(() => 2 / a.length));
    await expect(exploitability('dh2', bad, uniformPolicy)).rejects.toThrow(
      /sum to 2/,
    );
  });
});

describe('head to head', () => {
  it('symmetrized self-play value is exactly 0', async () => {
    const s1 = await infostates('dh2', 1);
    const s2 = await infostates('dh2', 2);
    const rand = mulberry32(7);
    const side = {
      player1: tabularPolicy(randomTable(s1, rand)),
      player2: tabularPolicy(randomTable(s2, rand)),
    };
    const res = await headToHead('dh2', side, side);
    expect(res.symmetrized).toBe(0);
  });

  it('omits the symmetrized value for single-player sides', async () => {
    const res = await headToHead('dh2', uniformPolicy, uniformPolicy);
    expect(res.symmetrized).toBeUndefined();
    expect(Math.abs(res.expectedValue)).toBeLessThanOrEqual(1e-9);
  });
});

describe('materialized files', () => {
  it('round-trips through the core policy parser', async () => {
    const dir = await tempDir();
    const f = join(dir, 'mat.sfpolicy');
    const renorm = await materializePolicy('adh2', 2, uniformPolicy, f);
    expect(renorm).toBe(0);
    // The core accepts the file as player 2 of adh2 (exit 0).
    const u = join(dir, 'u1.sfpolicy');
    await writeFile(u, 'SFPOLICY v1 adh2 1\n#defaults uniform\n');
    const { stdout } = await execFileAsync(BIN, ['expl', 'adh2', u, f]);
    expect(parseMetric(stdout, 'nash_gap')).toBeGreaterThan(0);
  });

  it('exports the full game-id list', () => {
    expect(GAME_IDS).toHaveLength(8);
    expect(GAME_IDS).toContain('pttt');
  });
});
