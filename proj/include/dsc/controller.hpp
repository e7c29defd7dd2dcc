#pragma once

#include <Eigen/Dense>

#include <string>

namespace dsc {

// One round of the online protocol: observe y_t, play u_t, update
// internal state. Instances are single-owner and sequential.
class Controller {
public:
    virtual ~Controller() = default;
    virtual std::string name() const = 0;
    virtual Eigen::VectorXd step(const Eigen::VectorXd& y) = 0;
};

}  // namespace dsc
