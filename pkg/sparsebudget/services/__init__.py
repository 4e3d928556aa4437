# Data environment, estimators, training loops and experiment services
