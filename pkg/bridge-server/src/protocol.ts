// Wire protocol types: one JSON object per line over stdio, each request
// answered by exactly one response in order.

export interface ColumnSchema {
  name: string;
  categories: string[];
}

export interface HelloRequest {
  op: "hello";
  version: number;
}

export interface FitRequest {
  op: "fit";
  columns: ColumnSchema[];
  rows: string[][];
  target_classes: string[];
  labels: string[];
}

export interface PredictRequest {
  op: "predict";
  rows: number[][];
}

export interface ShutdownRequest {
  op: "shutdown";
}

export type Request = HelloRequest | FitRequest | PredictRequest | ShutdownRequest;

export interface OkResponse {
  ok: true;
  name?: string;
  // null rows mark conditionals that are undefined under the estimator
  probs?: (number[] | null)[];
}

export interface ErrorResponse {
  ok: false;
  error: string;
}

export type Response = OkResponse | ErrorResponse;

export const PROTOCOL_VERSION = 1;

export function errorResponse(message: string): ErrorResponse {
  return { ok: false, error: message };
}
