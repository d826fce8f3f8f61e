/**
 * Agent-side protocol session: connect to a serving harness, handshake,
 * then answer every frame until `bye`. Ships two reference behaviors — a
 * constant-action driver and an echo segmenter that reads the class map
 * embedded in the red channel (harness test mode) — plus deliberate fault
 * modes used by the conformance tests.
 */

import { createConnection } from "node:net";

import {
  ActionMsg,
  Encoding,
  FrameMsg,
  HandshakeError,
  HelloMsg,
  LineChannel,
  Message,
  PROTOCOL_VERSION,
  ProtocolError,
  Role,
  SegMsg,
  decodeRawRgb,
  encodeClasses,
  parseEndpoint,
  redChannel,
} from "./protocol.js";

export type FrameHandler = (frame: FrameMsg) => ActionMsg | SegMsg;

export interface AgentConfig {
  role: Role;
  endpoint: string;
  encoding: Encoding;
  steering: number;
  throttle: number;
  /** fault injection: reply to seg frames with width - 1 */
  corruptDims: boolean;
  /** fault injection: send a hello with no role field */
  badHello: boolean;
}

export function constantActionHandler(
  steering: number,
  throttle: number,
): FrameHandler {
  return (frame) => ({
    type: "action",
    episode_id: frame.episode_id,
    frame_index: frame.frame_index,
    steering,
    throttle,
  });
}

export function echoSegHandler(corruptDims = false): FrameHandler {
  return (frame) => {
    if (frame.encoding !== "raw_rgb_base64") {
      throw new ProtocolError(
        `echo segmenter needs raw_rgb_base64 frames, got ${frame.encoding}`,
      );
    }
    const rgb = decodeRawRgb(frame.payload, frame.width, frame.height);
    return {
      type: "seg",
      episode_id: frame.episode_id,
      frame_index: frame.frame_index,
      width: corruptDims ? frame.width - 1 : frame.width,
      height: frame.height,
      classes: encodeClasses(redChannel(rgb)),
    };
  };
}

export async function openChannel(endpoint: string): Promise<LineChannel> {
  const { host, port } = parseEndpoint(endpoint);
  const sock = await new Promise<import("node:net").Socket>(
    (resolve, reject) => {
      const s = createConnection({ host, port }, () => {
        s.off("error", reject);
        resolve(s);
      });
      s.once("error", reject);
    },
  );
  return new LineChannel(sock);
}

export async function handshake(
  channel: LineChannel,
  role: Role,
  encoding: Encoding,
  badHello = false,
): Promise<void> {
  const hello: HelloMsg = {
    type: "hello",
    role,
    version: PROTOCOL_VERSION,
    encoding,
  };
  if (badHello) {
    delete (hello as Partial<HelloMsg>).role;
  }
  channel.send(hello);
  const reply = await channel.recv();
  if (reply.type === "error") {
    throw new HandshakeError(reply.message);
  }
  if (reply.type !== "hello_ack" || reply.version !== PROTOCOL_VERSION) {
    throw new HandshakeError(`bad handshake reply: ${JSON.stringify(reply)}`);
  }
}

/** Answer frames until bye; returns the number of frames served. */
export async function serveFrames(
  channel: LineChannel,
  handler: FrameHandler,
): Promise<number> {
  let served = 0;
  for (;;) {
    let msg: Message;
    try {
      msg = await channel.recv();
    } catch (err) {
      // The harness may drop the connection instead of saying bye after it
      // rejects a reply; treat that as end of session.
      if (err instanceof ProtocolError) {
        return served;
      }
      throw err;
    }
    if (msg.type === "bye") {
      return served;
    }
    if (msg.type === "error") {
      throw new ProtocolError(`harness error: ${msg.message}`);
    }
    if (msg.type !== "frame") {
      throw new ProtocolError(`unexpected message type ${msg.type}`);
    }
    channel.send(handler(msg));
    served += 1;
  }
}

/** Connect, handshake, serve every frame until bye; returns frames served. */
export async function runAgent(cfg: AgentConfig): Promise<number> {
  const handler =
    cfg.role === "driving-agent"
      ? constantActionHandler(cfg.steering, cfg.throttle)
      : echoSegHandler(cfg.corruptDims);
  const channel = await openChannel(cfg.endpoint);
  try {
    await handshake(channel, cfg.role, cfg.encoding, cfg.badHello);
    return await serveFrames(channel, handler);
  } finally {
    channel.close();
  }
}
