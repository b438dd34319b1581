#pragma once

#include "fqe/apply.hpp"
#include "fqe/bench.hpp"
#include "fqe/bitstring.hpp"
#include "fqe/error.hpp"
#include "fqe/evolve.hpp"
#include "fqe/fci_graph.hpp"
#include "fqe/fcidump.hpp"
#include "fqe/io.hpp"
#include "fqe/operators.hpp"
#include "fqe/oracle.hpp"
#include "fqe/parallel.hpp"
#include "fqe/random.hpp"
#include "fqe/rdm.hpp"
#include "fqe/verify.hpp"
#include "fqe/wavefunction.hpp"
