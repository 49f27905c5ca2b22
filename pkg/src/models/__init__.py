# Network, traffic and schedule models
