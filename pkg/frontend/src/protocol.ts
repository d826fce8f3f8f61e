/**
 * JSON-lines wire protocol between the benchmarking harness and external
 * agents. Every message is one UTF-8 JSON object per line with a `type`
 * field; requests strictly alternate (one frame in flight, the reply must
 * echo the frame_index it answers).
 */

import type { Socket } from "node:net";

export const PROTOCOL_VERSION = "1";

export type Role = "driving-agent" | "segmentation-agent";
export type Encoding = "png_base64" | "raw_rgb_base64";

export interface HelloMsg {
  type: "hello";
  role: Role;
  version: string;
  encoding?: Encoding;
}

export interface HelloAckMsg {
  type: "hello_ack";
  version: string;
}

export interface FrameMsg {
  type: "frame";
  episode_id: string;
  frame_index: number;
  width: number;
  height: number;
  encoding: Encoding;
  payload: string; // base64 pixels
  sim_time_s: number;
}

export interface ActionMsg {
  type: "action";
  episode_id: string;
  frame_index: number;
  steering: number;
  throttle: number;
}

export interface SegMsg {
  type: "seg";
  episode_id: string;
  frame_index: number;
  width: number;
  height: number;
  classes: string; // base64 row-major uint8 class ids
}

export interface ErrorMsg {
  type: "error";
  message: string;
}

export interface ByeMsg {
  type: "bye";
}

export type Message =
  | HelloMsg
  | HelloAckMsg
  | FrameMsg
  | ActionMsg
  | SegMsg
  | ErrorMsg
  | ByeMsg;

export class ProtocolError extends Error {}
export class HandshakeError extends Error {}

// --- payload codecs (raw_rgb_base64 only; PNG needs an image stack) ---

/** Interleaved RGB bytes of a raw_rgb_base64 frame payload. */
export function decodeRawRgb(
  payload: string,
  width: number,
  height: number,
): Buffer {
  const raw = Buffer.from(payload, "base64");
  if (raw.length !== width * height * 3) {
    throw new ProtocolError(
      `payload is ${raw.length} bytes, expected ${width * height * 3}`,
    );
  }
  return raw;
}

/** Red channel of interleaved RGB, as one byte per pixel (class-map test
 * mode embeds segmentation labels there). */
export function redChannel(rgb: Buffer): Buffer {
  const out = Buffer.alloc(rgb.length / 3);
  for (let i = 0; i < out.length; i++) {
    out[i] = rgb[i * 3];
  }
  return out;
}

export function encodeClasses(classes: Buffer): string {
  return classes.toString("base64");
}

// --- newline-delimited JSON over a socket ---

export const MAX_LINE_BYTES = 8 * 1024 * 1024;

/**
 * Buffers socket data into lines and parses each as a protocol message.
 * recv() resolves with the next message, in arrival order.
 */
export class LineChannel {
  private buf: Buffer = Buffer.alloc(0);
  private queue: Message[] = [];
  private waiters: Array<{
    resolve: (m: Message) => void;
    reject: (e: Error) => void;
  }> = [];
  private closedWith: Error | null = null;

  constructor(private readonly sock: Socket) {
    sock.on("data", (chunk: Buffer) => this.feed(chunk));
    sock.on("error", (err: Error) => this.finish(err));
    sock.on("close", () =>
      this.finish(new ProtocolError("peer closed the connection")),
    );
  }

  send(msg: Message): void {
    this.sock.write(JSON.stringify(msg) + "\n");
  }

  recv(): Promise<Message> {
    const next = this.queue.shift();
    if (next !== undefined) {
      return Promise.resolve(next);
    }
    if (this.closedWith !== null) {
      return Promise.reject(this.closedWith);
    }
    return new Promise((resolve, reject) => {
      this.waiters.push({ resolve, reject });
    });
  }

  close(): void {
    this.sock.destroy();
  }

  private feed(chunk: Buffer): void {
    this.buf = Buffer.concat([this.buf, chunk]);
    if (this.buf.length > MAX_LINE_BYTES) {
      this.finish(new ProtocolError("line exceeds maximum size"));
      return;
    }
    let nl: number;
    while ((nl = this.buf.indexOf(0x0a)) >= 0) {
      const line = this.buf.subarray(0, nl).toString("utf-8");
      this.buf = this.buf.subarray(nl + 1);
      let msg: Message;
      try {
        msg = JSON.parse(line) as Message;
      } catch {
        this.finish(
          new ProtocolError(`malformed JSON line: ${line.slice(0, 200)}`),
        );
        return;
      }
      if (typeof msg !== "object" || msg === null || !("type" in msg)) {
        this.finish(new ProtocolError("message without a type field"));
        return;
      }
      this.deliver(msg);
    }
  }

  private deliver(msg: Message): void {
    const waiter = this.waiters.shift();
    if (waiter) {
      waiter.resolve(msg);
    } else {
      this.queue.push(msg);
    }
  }

  private finish(err: Error): void {
    if (this.closedWith !== null) {
      return;
    }
    this.closedWith = err;
    for (const waiter of this.waiters.splice(0)) {
      waiter.reject(err);
    }
  }
}

/** Split "host:port" (last colon wins, so IPv6 hosts work). */
export function parseEndpoint(endpoint: string): { host: string; port: number } {
  const i = endpoint.lastIndexOf(":");
  const port = Number(endpoint.slice(i + 1));
  if (i <= 0 || !Number.isInteger(port) || port < 0 || port > 65535) {
    throw new Error(`endpoint must be host:port, got ${JSON.stringify(endpoint)}`);
  }
  return { host: endpoint.slice(0, i), port };
}
