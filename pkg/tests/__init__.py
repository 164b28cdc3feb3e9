# 测试模块：pytest 运行；长时间验收用 pytest -m slow
