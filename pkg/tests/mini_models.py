"""Miniature model texts shared by the engine and CLI tests."""

# A two-type network that is safe: the lock is taken once and never
# released, so the observer counts at most one handshake.
MINI_SAFE = """
system {
  globals lock;
  init lock = 0;
  channel enter;
  template worker replicated {
    locals loc;
    init loc = 0;
    trans local when loc = 0 and lock = 0 do lock := id + 1, loc := 1;
    trans send enter when loc = 1 and lock = id + 1 do loc := 2;
  }
  template obs {
    locals cnt;
    init cnt = 0;
    trans recv enter do cnt := cnt + 1;
  }
  error { obs: cnt >= 2; }
}
"""

# Same network with the bar lowered: one handshake is already an error,
# reachable with a single worker in two steps.
MINI_UNSAFE = MINI_SAFE.replace("cnt >= 2", "cnt >= 1")

# One replicated template alone: a pair of stepped processes is an
# error, reachable with two instances.
MONO_UNSAFE = """
system {
  template p replicated {
    locals loc;
    init loc = 0;
    trans local when loc = 0 do loc := 1;
  }
  error { p: loc = 1; p: loc = 1; }
}
"""
