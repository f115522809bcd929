/**
 * TypeScript port of the vocagno alignment and token-selection routines.
 *
 * The reference implementation keeps its selection arithmetic in plain
 * left-to-right float operations with an explicit sort key precisely so that
 * this port can reproduce its output bit-for-bit; every loop below mirrors
 * the reference evaluation order. The differential test in ../test asserts
 * byte-identical JSONL output against the `python3 -m vocagno` CLI.
 */

export type MappingEntry = [number, number] | null;

export type Phi = "mean" | "max" | "sum";
export type UnmappedPolicy = "include" | "exclude" | "mean";
export type ThresholdScope = "sequence" | "batch";

export interface GuidanceConfig {
  phi: Phi;
  unmapped: UnmappedPolicy;
  keepRatio: number;
  scope: ThresholdScope;
}

export const defaultConfig: GuidanceConfig = {
  phi: "mean",
  unmapped: "include",
  keepRatio: 0.4,
  scope: "sequence",
};

export class EmptyScopeError extends Error {}
export class LengthMismatchError extends Error {}
export class IndexOutOfRangeError extends Error {}

/** First index in `a` where `a[i] > x` (bisect right). */
function searchSortedRight(a: number[], x: number): number {
  let lo = 0;
  let hi = a.length;
  while (lo < hi) {
    const mid = (lo + hi) >>> 1;
    if (a[mid] <= x) lo = mid + 1;
    else hi = mid;
  }
  return lo;
}

/** First index in `a` where `a[i] >= x` (bisect left). */
function searchSortedLeft(a: number[], x: number): number {
  let lo = 0;
  let hi = a.length;
  while (lo < hi) {
    const mid = (lo + hi) >>> 1;
    if (a[mid] < x) lo = mid + 1;
    else hi = mid;
  }
  return lo;
}

/**
 * Map each student span to the minimal contiguous range of overlapping
 * teacher token indices, `null` when nothing overlaps.
 *
 * lowIdx is the first teacher index whose end exceeds the student start,
 * highIdx the last whose start is below the student end; zero-width teacher
 * tokens at the edges of that candidate range are trimmed off, since an
 * empty interval overlaps nothing.
 */
export function alignOffsets(
  stS: number[],
  edS: number[],
  stT: number[],
  edT: number[],
): MappingEntry[] {
  const n = stS.length;
  const out: MappingEntry[] = new Array(n).fill(null);
  const solidT: number[] = [];
  for (let t = 0; t < stT.length; t++) {
    if (edT[t] > stT[t]) solidT.push(t);
  }
  if (solidT.length === 0) return out;

  for (let s = 0; s < n; s++) {
    if (edS[s] <= stS[s]) continue; // zero-width student token
    const low = searchSortedRight(edT, stS[s]);
    const high = searchSortedLeft(stT, edS[s]) - 1;
    if (low > high) continue;
    const li = searchSortedLeft(solidT, low);
    const hi = searchSortedRight(solidT, high) - 1;
    if (li >= solidT.length || hi < 0) continue;
    const j = solidT[li];
    const k = solidT[hi];
    if (j > k) continue;
    out[s] = [j, k];
  }
  return out;
}

/** Reduce each mapped teacher loss range to one value; null when unmapped. */
export function aggregateTeacherLoss(
  mapping: MappingEntry[],
  teacherLosses: number[],
  phi: Phi,
): (number | null)[] {
  const m = teacherLosses.length;
  const out: (number | null)[] = [];
  for (const entry of mapping) {
    if (entry === null) {
      out.push(null);
      continue;
    }
    const [j, k] = entry;
    if (j < 0 || k >= m || j > k) {
      throw new IndexOutOfRangeError(`mapping range (${j},${k}) vs ${m} teacher losses`);
    }
    if (phi === "mean" || phi === "sum") {
      let total = 0;
      for (let t = j; t <= k; t++) total += teacherLosses[t];
      out.push(phi === "mean" ? total / (k - j + 1) : total);
    } else {
      let best = teacherLosses[j];
      for (let t = j + 1; t <= k; t++) {
        if (teacherLosses[t] > best) best = teacherLosses[t];
      }
      out.push(best);
    }
  }
  return out;
}

interface Competitor {
  delta: number;
  s: number;
  i: number;
}

function compareCompetitors(a: Competitor, b: Competitor): number {
  if (a.delta !== b.delta) return a.delta < b.delta ? 1 : -1;
  if (a.s !== b.s) return a.s - b.s;
  return a.i - b.i;
}

function selectInScope(
  group: number[],
  studentLosses: number[][],
  teacherAgg: (number | null)[][],
  config: GuidanceConfig,
  weights: number[][],
): void {
  const present: [number, number][] = [];
  const absent: [number, number][] = [];
  for (const s of group) {
    for (let i = 0; i < studentLosses[s].length; i++) {
      (teacherAgg[s][i] !== null ? present : absent).push([s, i]);
    }
  }

  let competing: Competitor[];
  if (config.unmapped === "mean") {
    if (present.length === 0) {
      throw new EmptyScopeError("mean-fill with no mapped tokens in scope");
    }
    let total = 0;
    for (const [s, i] of present) total += teacherAgg[s][i] as number;
    const meanT = total / present.length;
    competing = present.map(([s, i]) => ({
      delta: studentLosses[s][i] - (teacherAgg[s][i] as number),
      s,
      i,
    }));
    for (const [s, i] of absent) {
      competing.push({ delta: studentLosses[s][i] - meanT, s, i });
    }
  } else {
    if (present.length === 0) {
      if (config.unmapped === "exclude") {
        throw new EmptyScopeError("no mapped tokens in scope");
      }
      for (const [s, i] of absent) weights[s][i] = 1;
      return;
    }
    competing = present.map(([s, i]) => ({
      delta: studentLosses[s][i] - (teacherAgg[s][i] as number),
      s,
      i,
    }));
  }

  const keep = Math.ceil(config.keepRatio * competing.length);
  competing.sort(compareCompetitors);
  for (let r = 0; r < keep; r++) {
    weights[competing[r].s][competing[r].i] = 1;
  }

  if (config.unmapped === "include") {
    for (const [s, i] of absent) weights[s][i] = 1;
  } else if (config.unmapped === "exclude") {
    for (const [s, i] of absent) weights[s][i] = 0;
  }
}

/**
 * Binary weights per sequence: within each scope, the
 * ceil(keepRatio * competing) tokens with the largest student-minus-teacher
 * excess loss get weight 1; ties break toward the earlier (sequence, token)
 * position. Unmapped tokens are forced to 1 under include, to 0 under
 * exclude, and compete after mean-filling under mean.
 */
export function selectTokens(
  studentLosses: number[][],
  teacherAgg: (number | null)[][],
  config: GuidanceConfig = defaultConfig,
): number[][] {
  if (studentLosses.length !== teacherAgg.length) {
    throw new LengthMismatchError(
      `${studentLosses.length} sequences vs ${teacherAgg.length}`,
    );
  }
  for (let s = 0; s < studentLosses.length; s++) {
    if (studentLosses[s].length !== teacherAgg[s].length) {
      throw new LengthMismatchError(
        `${studentLosses[s].length} losses vs ${teacherAgg[s].length} teacher aggregates`,
      );
    }
  }

  const nSeq = studentLosses.length;
  const groups: number[][] =
    config.scope === "batch"
      ? [Array.from({ length: nSeq }, (_, s) => s)]
      : Array.from({ length: nSeq }, (_, s) => [s]);

  const weights = studentLosses.map((losses) => new Array<number>(losses.length).fill(0));
  for (const group of groups) {
    selectInScope(group, studentLosses, teacherAgg, config, weights);
  }
  return weights;
}

export interface SequenceSide {
  st: number[];
  ed: number[];
  losses?: number[];
}

export interface CorpusDoc {
  docId: string;
  student: SequenceSide;
  teacher: SequenceSide;
}

/** The `align` subcommand for one document: mapping plus all-one weights. */
export function alignDoc(doc: CorpusDoc): { mapping: MappingEntry[]; weights: number[] } {
  const mapping = alignOffsets(doc.student.st, doc.student.ed, doc.teacher.st, doc.teacher.ed);
  return { mapping, weights: new Array(mapping.length).fill(1) };
}

/** The `select` subcommand for a batch of documents. */
export function selectDocs(
  docs: CorpusDoc[],
  config: GuidanceConfig = defaultConfig,
): { mapping: MappingEntry[]; weights: number[] }[] {
  const mappings = docs.map((doc) =>
    alignOffsets(doc.student.st, doc.student.ed, doc.teacher.st, doc.teacher.ed),
  );
  const teacherAgg = docs.map((doc, d) =>
    aggregateTeacherLoss(mappings[d], doc.teacher.losses ?? [], config.phi),
  );
  const weights = selectTokens(
    docs.map((doc) => doc.student.losses ?? []),
    teacherAgg,
    config,
  );
  return mappings.map((mapping, d) => ({ mapping, weights: weights[d] }));
}

/** Serialize one mask record exactly as the reference JSONL writer does. */
export function maskLine(docId: string, mapping: MappingEntry[], weights: number[]): string {
  return JSON.stringify({ doc_id: docId, mapping, weights });
}
