#!/usr/bin/env python3
# Copyright 2026 The drnnsep Authors
# License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
"""Writes model_v1.drnn from the documented container layout, independently
of the C++ encoder. Parameter i holds (i + 1) / 64 - 0.4."""

import json
import pathlib
import struct
import zlib

header = {
    "format_version": "1.0",
    "layer_sizes": [3, 4, 4],
    "recurrence": "drnn-1",
    "bins": 2,
    "parameter_count": 52,
    "parameter_order": "per layer: W row-major (out x in), U row-major if recurrent, b",
    "stft": {"fft_size": 4, "hop": 2, "window": "hann"},
    "feature_kind": "spectra",
    "context_frames": 1,
    "n_mels": 40,
    "sample_rate": 16000,
}
text = json.dumps(header, separators=(",", ":"), sort_keys=True).encode("utf-8")
values = [(i + 1) / 64 - 0.4 for i in range(52)]
payload = struct.pack("<Q", len(text)) + text + struct.pack("<%dd" % len(values), *values)
blob = b"DRNNSEP1" + payload + struct.pack("<I", zlib.crc32(payload) & 0xFFFFFFFF)
pathlib.Path(__file__).with_name("model_v1.drnn").write_bytes(blob)
