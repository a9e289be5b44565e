#pragma once

#include "fkbench/model.hpp"

namespace fixtures {

// Two states, M = [[0.8, 0.2], [0.3, 0.7]] at every step, G = (0.5, 2.0),
// eta0 uniform.
inline fkbench::FeynmanKacModel two_state(int horizon = 2, bool unit_potential = false)
{
    fkbench::FeynmanKacModel model;
    model.horizon = horizon;
    model.dims.assign(static_cast<std::size_t>(horizon) + 1, 2);
    fkbench::Matrix m(2, 2);
    m << 0.8, 0.2, 0.3, 0.7;
    model.kernels.assign(static_cast<std::size_t>(horizon), m);
    fkbench::Vector g(2);
    if (unit_potential)
        g << 1.0, 1.0;
    else
        g << 0.5, 2.0;
    model.potentials.assign(static_cast<std::size_t>(horizon) + 1, g);
    model.eta0 = fkbench::Vector::Constant(2, 0.5);
    return model;
}

// Three states with time-varying kernels and potentials.
inline fkbench::FeynmanKacModel three_state(int horizon = 4)
{
    fkbench::FeynmanKacModel model;
    model.horizon = horizon;
    model.dims.assign(static_cast<std::size_t>(horizon) + 1, 3);
    for (int n = 0; n < horizon; ++n)
    {
        fkbench::Matrix m(3, 3);
        const double a = 0.1 + 0.05 * n;
        m << 1.0 - 2 * a, a, a,
             0.2, 0.5, 0.3,
             a, 0.4, 0.6 - a;
        model.kernels.push_back(m);
    }
    for (int n = 0; n <= horizon; ++n)
    {
        fkbench::Vector g(3);
        g << 1.0 + 0.1 * n, 0.4, 2.5 - 0.2 * n;
        model.potentials.push_back(g);
    }
    model.eta0 = fkbench::Vector(3);
    model.eta0 << 0.2, 0.5, 0.3;
    return model;
}

inline fkbench::TestFunction indicator(const fkbench::FeynmanKacModel& model, int state)
{
    fkbench::TestFunction f;
    for (int n = 0; n <= model.horizon; ++n)
    {
        fkbench::Vector v = fkbench::Vector::Zero(model.dim(n));
        v[state] = 1.0;
        f.values.push_back(v);
    }
    return f;
}

} // namespace fixtures
