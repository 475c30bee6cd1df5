// Dashboard series builders. These only reshape gateway responses into
// chart-ready arrays; no totals or averages are computed here.

import { FluidSummaryRow, MeanPoint, SleepNightRow } from "./api.js";
import { percent } from "./format.js";

export interface FluidChart {
  empty: boolean;
  dates: string[];
  totals: number[];
  goal: number[];
  cohortMean: Array<number | null>;
}

export interface SleepBar {
  date: string;
  tstMin: number;
  tooltip: string;
}

export interface SleepChart {
  empty: boolean;
  bars: SleepBar[];
}

export function buildFluidChart(rows: FluidSummaryRow[],
                                cohort: MeanPoint[]): FluidChart {
  if (rows.length === 0) {
    return { empty: true, dates: [], totals: [], goal: [], cohortMean: [] };
  }
  const meanByDate = new Map(cohort.map((p) => [p.local_date, p.mean_ml]));
  return {
    empty: false,
    dates: rows.map((r) => r.local_date),
    totals: rows.map((r) => r.total_ml),
    goal: rows.map((r) => r.goal_ml),
    cohortMean: rows.map((r) => meanByDate.get(r.local_date) ?? null),
  };
}

export function buildSleepChart(nights: SleepNightRow[]): SleepChart {
  if (nights.length === 0) {
    return { empty: true, bars: [] };
  }
  return {
    empty: false,
    bars: nights.map((n) => ({
      date: n.diary_date,
      tstMin: n.tst_min,
      tooltip: `TST ${n.tst_min} min, efficiency ${percent(n.sleep_efficiency)}`,
    })),
  };
}

export function cohortChart(series: MeanPoint[]): FluidChart {
  if (series.length === 0) {
    return { empty: true, dates: [], totals: [], goal: [], cohortMean: [] };
  }
  return {
    empty: false,
    dates: series.map((p) => p.local_date),
    totals: series.map((p) => p.mean_ml),
    goal: [],
    cohortMean: series.map((p) => p.mean_ml),
  };
}
