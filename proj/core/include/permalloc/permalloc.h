#ifndef PERMALLOC_PERMALLOC_H_
#define PERMALLOC_PERMALLOC_H_

#include "permalloc/aes_round.h"
#include "permalloc/arena.h"
#include "permalloc/buf2ptr.h"
#include "permalloc/error.h"
#include "permalloc/histogram.h"
#include "permalloc/litmus.h"
#include "permalloc/perm_cache.h"
#include "permalloc/permutation.h"
#include "permalloc/prng.h"
#include "permalloc/runtime.h"
#include "permalloc/throughput.h"
#include "permalloc/uniformity.h"

#endif  // PERMALLOC_PERMALLOC_H_
