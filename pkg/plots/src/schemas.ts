import { z } from "zod";

const proportion = z.coerce.number().min(0).max(1);

export const assignRowSchema = z.object({
  c: z.coerce.number().positive(),
  N: z.coerce.number().int().positive(),
  replicates: z.coerce.number().int().positive(),
  prop_correct: proportion,
  prop_se: z.coerce.number().min(0),
  zero_correct_freq: proportion,
  theory: proportion,
});
export type AssignRow = z.infer<typeof assignRowSchema>;

export const lossRowSchema = z.object({
  c: z.coerce.number().positive(),
  sweep: z.coerce.number().int().positive(),
  l0: z.coerce.number().int().min(0),
});
export type LossRow = z.infer<typeof lossRowSchema>;

export const popestRowSchema = z.object({
  c: z.coerce.number().positive(),
  replicate: z.coerce.number().int().min(0),
  prop_correct: z.coerce.number(),
  covered: z.coerce.number(),
  n0_true: z.coerce.number(),
  n0_hat: z.coerce.number(),
  ci_lo: z.coerce.number(),
  ci_hi: z.coerce.number(),
  mse_nx: z.coerce.number(),
  failed: z.coerce.number(),
});
export type PopestRow = z.infer<typeof popestRowSchema>;

export const popestSummarySchema = z.record(
  z.string(),
  z.object({
    c: z.number().positive(),
    replicates: z.number().int().positive(),
    failed: z.number().int().min(0),
    coverage: z.number(),
    mean_prop_correct: z.number(),
    mse_n0: z.number(),
    mse_nx: z.number(),
  }),
);
export type PopestSummary = z.infer<typeof popestSummarySchema>;

export const boundsRecordSchema = z.object({
  n: z.number().int().positive(),
  lower: z.number(),
  upper: z.number(),
  exact: z.number(),
});

export const theorySchema = z.object({
  derangement: z.object({
    records: z.array(boundsRecordSchema).min(1),
    gap_at_max: z.number(),
  }),
});
export type TheoryPayload = z.infer<typeof theorySchema>;

export const manifestSchema = z.object({ seed: z.number().int() }).passthrough();
