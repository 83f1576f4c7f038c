// Session turn list: the only state the console keeps.
// Turns persist as (prompt, result id, timestamp) triples; everything else
// is refetched from the service, so a reload rebuilds the exact session.

import type { GenerationResult } from './api.js';

export interface SessionTurn {
  prompt: string;
  resultId: string;
  timestamp: string;
}

/** A turn rehydrated from the service after a reload. */
export interface RestoredTurn {
  turn: SessionTurn;
  result: GenerationResult | null; // null: the persisted id is gone
}

export const STORAGE_KEY = 'vizagent_session_turns';

export interface StorageLike {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

/** The one service call session restore needs; ApiClient satisfies it. */
export interface ResultSource {
  getResult(resultId: string): Promise<GenerationResult>;
}

function defaultStorage(): StorageLike | null {
  try {
    return typeof localStorage === 'undefined' ? null : localStorage;
  } catch {
    return null;
  }
}

export class SessionStore {
  private turns: SessionTurn[] = [];
  private readonly storage: StorageLike | null;

  constructor(storage?: StorageLike) {
    this.storage = storage ?? defaultStorage();
    this.turns = this.readBack();
  }

  list(): readonly SessionTurn[] {
    return this.turns;
  }

  add(prompt: string, resultId: string, timestamp?: string): SessionTurn {
    const turn: SessionTurn = {
      prompt,
      resultId,
      timestamp: timestamp ?? new Date().toISOString(),
    };
    this.turns.push(turn);
    this.write();
    return turn;
  }

  clear(): void {
    this.turns = [];
    try {
      this.storage?.removeItem(STORAGE_KEY);
    } catch {
      // storage unavailable; in-memory list is already cleared
    }
  }

  /** Refetch every persisted turn's result; missing ids come back null. */
  async restore(api: ResultSource): Promise<RestoredTurn[]> {
    const restored: RestoredTurn[] = [];
    for (const turn of this.turns) {
      try {
        restored.push({ turn, result: await api.getResult(turn.resultId) });
      } catch {
        restored.push({ turn, result: null });
      }
    }
    return restored;
  }

  private readBack(): SessionTurn[] {
    try {
      const raw = this.storage?.getItem(STORAGE_KEY);
      if (!raw) return [];
      const parsed: unknown = JSON.parse(raw);
      if (!Array.isArray(parsed)) return [];
      return parsed.filter(
        (t): t is SessionTurn =>
          typeof t === 'object' &&
          t !== null &&
          typeof (t as SessionTurn).prompt === 'string' &&
          typeof (t as SessionTurn).resultId === 'string' &&
          typeof (t as SessionTurn).timestamp === 'string',
      );
    } catch {
      return [];
    }
  }

  private write(): void {
    try {
      this.storage?.setItem(STORAGE_KEY, JSON.stringify(this.turns));
    } catch {
      // quota or private-mode failure: the session just won't survive reload
    }
  }
}
