# 力学计算模块初始化文件
