# 工具模块：配置类型与通用辅助函数
