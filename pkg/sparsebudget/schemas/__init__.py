# Pydantic schemas for configuration, reports and trace records
