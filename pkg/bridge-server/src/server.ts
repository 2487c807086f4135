// Reference model server: newline-delimited JSON over stdio.
//
// Lifecycle: hello -> (fit -> predict*)* -> shutdown. Predict before fit is a
// protocol error; a malformed line gets an error response and the loop keeps
// running. Responses are strictly ordered with requests. Env vars:
//   ESTIMATOR        estimator to serve (default "empirical")
//   SMOOTHING_ALPHA  Laplace smoothing for the empirical estimator (default 0)

import { createInterface } from "node:readline";

import { Estimator, FittedContext, makeEstimator } from "./estimator.js";
import { PROTOCOL_VERSION, Request, Response, errorResponse } from "./protocol.js";

interface ServerState {
  estimator: Estimator | null;
  estimatorError: string | null;
  fitted: FittedContext | null;
}

export function createState(): ServerState {
  const name = process.env.ESTIMATOR ?? "empirical";
  const alpha = Number(process.env.SMOOTHING_ALPHA ?? "0");
  try {
    return { estimator: makeEstimator(name, alpha), estimatorError: null, fitted: null };
  } catch (err) {
    return { estimator: null, estimatorError: String((err as Error).message), fitted: null };
  }
}

export function handle(state: ServerState, message: unknown): { response: Response; shutdown: boolean } {
  if (typeof message !== "object" || message === null || Array.isArray(message)) {
    return { response: errorResponse("request must be a JSON object"), shutdown: false };
  }
  const req = message as Partial<Request> & { op?: unknown };
  if (state.estimator === null) {
    return { response: errorResponse(state.estimatorError ?? "no estimator"), shutdown: false };
  }
  switch (req.op) {
    case "hello": {
      const version = (req as { version?: unknown }).version;
      if (version !== PROTOCOL_VERSION) {
        return {
          response: errorResponse(`unsupported protocol version ${JSON.stringify(version)}`),
          shutdown: false,
        };
      }
      return { response: { ok: true, name: state.estimator.name }, shutdown: false };
    }
    case "fit": {
      const r = req as Partial<import("./protocol.js").FitRequest>;
      if (!Array.isArray(r.columns) || !Array.isArray(r.rows) ||
          !Array.isArray(r.target_classes) || !Array.isArray(r.labels)) {
        return { response: errorResponse("fit needs columns, rows, target_classes and labels"), shutdown: false };
      }
      try {
        state.fitted = state.estimator.fit(r.columns, r.rows, r.target_classes, r.labels);
      } catch (err) {
        return { response: errorResponse(String((err as Error).message)), shutdown: false };
      }
      return { response: { ok: true }, shutdown: false };
    }
    case "predict": {
      if (state.fitted === null) {
        return { response: errorResponse("not fitted"), shutdown: false };
      }
      const rows = (req as { rows?: unknown }).rows;
      if (!Array.isArray(rows)) {
        return { response: errorResponse("predict needs a rows array"), shutdown: false };
      }
      try {
        const probs = rows.map((probe) => {
          if (!Array.isArray(probe) || probe.some((v) => typeof v !== "number")) {
            throw new Error("probe rows must be arrays of numbers");
          }
          return state.estimator!.predict(state.fitted!, probe as number[]);
        });
        return { response: { ok: true, probs }, shutdown: false };
      } catch (err) {
        return { response: errorResponse(String((err as Error).message)), shutdown: false };
      }
    }
    case "shutdown":
      return { response: { ok: true }, shutdown: true };
    default:
      return { response: errorResponse(`unknown op ${JSON.stringify(req.op)}`), shutdown: false };
  }
}

export function serve(): void {
  const state = createState();
  const lines = createInterface({ input: process.stdin, terminal: false });
  let done = false;
  lines.on("line", (line) => {
    if (done) return;
    const trimmed = line.trim();
    if (trimmed === "") return;
    let message: unknown;
    try {
      message = JSON.parse(trimmed);
    } catch (err) {
      process.stdout.write(
        JSON.stringify(errorResponse(`invalid JSON: ${(err as Error).message}`)) + "\n"
      );
      return;
    }
    const { response, shutdown } = handle(state, message);
    process.stdout.write(JSON.stringify(response) + "\n");
    if (shutdown) {
      done = true;
      lines.close();
      process.exit(0);
    }
  });
  lines.on("close", () => {
    if (!done) process.exit(0);
  });
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  import.meta.url === new URL(`file://${process.argv[1]}`).href;

if (invokedDirectly) {
  serve();
}
