#pragma once

#include "qcomb/error.hpp"
#include "qcomb/matrix.hpp"
#include "qcomb/linalg.hpp"
#include "qcomb/labeled.hpp"
#include "qcomb/random.hpp"
#include "qcomb/channels.hpp"
#include "qcomb/testers.hpp"
#include "qcomb/samplers.hpp"
#include "qcomb/discrimination.hpp"
#include "qcomb/distances.hpp"
#include "qcomb/unitary.hpp"
#include "qcomb/paper_example.hpp"
#include "qcomb/io.hpp"
