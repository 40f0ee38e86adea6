# Python on Windows doesn't expose these constants in os module

EX_OK = 0
# click reports usage errors with 2 as well
EX_CONFIG = 2
# solver finished without its certificate, outputs are still written
EX_SOLVER = 3
EX_SOFTWARE = 70
EX_IOERR = 74
EX_INTERRUPTED = 130
