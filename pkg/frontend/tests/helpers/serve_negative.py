"""Serve one connection and report the expected protocol failure.

Modes:
  hello  expect the handshake to fail -> print "HANDSHAKE_ERROR <msg>"
  dims   handshake as segmentation, send one frame, expect the reply's
         dimensions to be rejected -> print "PROTOCOL_ERROR <msg>"

Prints "PORT <n>" once listening.
"""

import sys

import numpy as np

from drivebench import agentproto
from drivebench.errors import HandshakeError, ProtocolError


def main():
    mode = sys.argv[1]
    server = agentproto.HarnessServer(port=0)
    print(f"PORT {server.port}", flush=True)
    try:
        session = server.accept(timeout_s=30.0)
    except HandshakeError as exc:
        print(f"HANDSHAKE_ERROR {exc}", flush=True)
        server.close()
        return
    if mode == "hello":
        print("UNEXPECTED handshake succeeded", flush=True)
        session.bye()
        server.close()
        return
    img = np.zeros((48, 64, 3), dtype=np.uint8)
    try:
        session.request_segmentation(img, "ep0", 0, deadline_ms=5000)
        print("UNEXPECTED segmentation accepted", flush=True)
    except ProtocolError as exc:
        print(f"PROTOCOL_ERROR {exc}", flush=True)
    session.bye()
    server.close()


if __name__ == "__main__":
    main()
