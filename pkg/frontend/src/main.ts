/**
 * Conformance CLI: run a reference agent against a serving harness.
 *
 *   refagent --role driving --endpoint 127.0.0.1:9000 --steer 0.0 --throttle 0.3
 *   refagent --role segmentation --endpoint 127.0.0.1:9000
 *
 * Fault-injection flags (--bad-hello, --corrupt-dims) exist for negative
 * protocol tests and make the run fail by design.
 */

import { parseArgs } from "node:util";

import { AgentConfig, runAgent } from "./agent.js";
import { Role } from "./protocol.js";

export function configFromArgv(argv: string[]): AgentConfig {
  const { values } = parseArgs({
    args: argv,
    options: {
      role: { type: "string" },
      endpoint: { type: "string" },
      steer: { type: "string" },
      throttle: { type: "string" },
      encoding: { type: "string", default: "raw_rgb_base64" },
      "corrupt-dims": { type: "boolean", default: false },
      "bad-hello": { type: "boolean", default: false },
    },
  });

  const roles: Record<string, Role> = {
    driving: "driving-agent",
    segmentation: "segmentation-agent",
  };
  const role = roles[values.role ?? ""];
  if (!role) {
    throw new Error("--role must be 'driving' or 'segmentation'");
  }
  if (!values.endpoint) {
    throw new Error("--endpoint host:port is required");
  }
  if (role === "segmentation-agent" && (values.steer || values.throttle)) {
    throw new Error("--steer/--throttle only apply to --role driving");
  }
  if (values.encoding !== "png_base64" && values.encoding !== "raw_rgb_base64") {
    throw new Error("--encoding must be png_base64 or raw_rgb_base64");
  }

  const num = (s: string | undefined, fallback: number, flag: string) => {
    if (s === undefined) {
      return fallback;
    }
    const v = Number(s);
    if (!Number.isFinite(v)) {
      throw new Error(`${flag} must be a number, got ${JSON.stringify(s)}`);
    }
    return v;
  };

  return {
    role,
    endpoint: values.endpoint,
    encoding: values.encoding,
    steering: num(values.steer, 0.0, "--steer"),
    throttle: num(values.throttle, 0.3, "--throttle"),
    corruptDims: values["corrupt-dims"],
    badHello: values["bad-hello"],
  };
}

export async function main(argv: string[]): Promise<number> {
  let cfg: AgentConfig;
  try {
    cfg = configFromArgv(argv);
  } catch (err) {
    process.stderr.write(`refagent: ${(err as Error).message}\n`);
    return 2;
  }
  try {
    const served = await runAgent(cfg);
    process.stdout.write(`served ${served} frames\n`);
    return 0;
  } catch (err) {
    process.stderr.write(`refagent: ${(err as Error).message}\n`);
    return 1;
  }
}

const entry = process.argv[1] ?? "";
if (entry.endsWith("main.js") || entry.endsWith("refagent")) {
  main(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}
