/** The five figures rendered from one sweep, one per headline metric. */

export interface FigureSpec {
  /** output file stem, fig1..fig5 */
  name: string;
  /** value column in the results CSV */
  metric: string;
  /** matching standard-error column */
  stderr: string;
  yLabel: string;
  yScale: "linear" | "log";
  /** multiply values before plotting (bit/s to kbit/s on figure 3) */
  yFactor?: number;
}

export const FIGURES: FigureSpec[] = [
  {
    name: "fig1_pdr",
    metric: "pdr",
    stderr: "pdr_stderr",
    yLabel: "Packet delivery ratio",
    yScale: "linear",
  },
  {
    name: "fig2_access_delay",
    metric: "mean_access_delay_s",
    stderr: "delay_stderr",
    yLabel: "Mean access delay [s]",
    yScale: "log",
  },
  {
    name: "fig3_throughput",
    metric: "throughput_bps",
    stderr: "thr_stderr",
    yLabel: "Throughput [kbit/s]",
    yScale: "log",
    yFactor: 1e-3,
  },
  {
    name: "fig4_normalized_throughput",
    metric: "normalized_throughput",
    stderr: "nthr_stderr",
    yLabel: "Normalized throughput",
    yScale: "linear",
  },
  {
    name: "fig5_aoi",
    metric: "mean_aoi_s",
    stderr: "aoi_stderr",
    yLabel: "Mean AoI [s]",
    yScale: "log",
  },
];
