# 组件模块：mechanics 计算库与 commands 命令层
